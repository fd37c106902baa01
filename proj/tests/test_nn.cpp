#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <filesystem>

#include "support/test_oracles.hpp"
#include "swarmlab/errors.hpp"
#include "swarmlab/nn.hpp"
#include "swarmlab/rng.hpp"

using namespace swarmlab;

namespace {

nn::PolicySpec tiny_spec(int obs = 3, int n = 2, int P = 4, std::vector<int> hidden = {5}) {
    nn::PolicySpec spec;
    spec.task = "rendezvous";
    spec.P = P;
    spec.obs_dim = obs;
    spec.comm_size = n;
    spec.inflow_mode = comm::InflowMode::sum;
    spec.hidden = std::move(hidden);
    return spec;
}

std::vector<double> random_vec(Rng& rng, int n, double span = 1.5) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-span, span);
    return v;
}

}  // namespace

TEST_CASE("forward: zero weights give uniform actions and zero comm") {
    auto spec = tiny_spec();
    nn::PolicyParams params;
    params.spec = spec;
    params.W = {nn::Matrix(5, spec.input_dim()), nn::Matrix(spec.output_dim(), 5)};
    params.b = {nn::Vector(5, 0.0), nn::Vector(spec.output_dim(), 0.0)};

    std::vector<double> obs = {1.0, 2.0, 0.0};
    std::vector<double> inflow = {0.5, -0.5};
    auto res = nn::forward(params, obs, inflow);
    auto q = nn::softmax(res.logits);
    for (double p : q) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    for (double c : res.comm_out) CHECK(c == 0.0);
}

TEST_CASE("forward: hand-computed single hidden unit") {
    // obs=1, comm=0, P=2, one hidden unit: out = W1 * tanh(W0*x + b0) + b1.
    nn::PolicySpec spec;
    spec.P = 2;
    spec.obs_dim = 1;
    spec.comm_size = 0;
    spec.hidden = {1};
    nn::PolicyParams params;
    params.spec = spec;
    params.W = {nn::Matrix(1, 1), nn::Matrix(2, 1)};
    params.b = {nn::Vector{0.5}, nn::Vector{0.1, -0.2}};
    params.W[0].at(0, 0) = 2.0;
    params.W[1].at(0, 0) = 1.0;
    params.W[1].at(1, 0) = -3.0;

    std::vector<double> obs = {0.25};
    auto res = nn::forward(params, obs, {});
    double h = std::tanh(2.0 * 0.25 + 0.5);
    CHECK(res.logits[0] == doctest::Approx(1.0 * h + 0.1).epsilon(1e-15));
    CHECK(res.logits[1] == doctest::Approx(-3.0 * h - 0.2).epsilon(1e-15));

    auto again = nn::forward(params, obs, {});
    CHECK(res.logits == again.logits);  // bit-identical
}

TEST_CASE("forward validates input lengths") {
    auto params = nn::init_params(tiny_spec(), 1);
    std::vector<double> obs = {1.0, 2.0};  // wrong: spec wants 3
    std::vector<double> inflow = {0.0, 0.0};
    CHECK_THROWS_AS(nn::forward(params, obs, inflow), LengthMismatch);
}

TEST_CASE("softmax") {
    std::vector<double> flat = {0.3, 0.3, 0.3};
    auto q = nn::softmax(flat);
    for (double p : q) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));

    std::vector<double> spike = {0.0, 1000.0, 0.0};
    auto qs = nn::softmax(spike);
    CHECK(qs[1] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> hand = {-1.0, 0.0, 1.0};
    auto qh = nn::softmax(hand);
    double z = std::exp(-1.0) + 1.0 + std::exp(1.0);
    CHECK(qh[0] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-12));
    CHECK(qh[1] == doctest::Approx(1.0 / z).epsilon(1e-12));
    CHECK(qh[2] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));

    SUBCASE("shift invariance") {
        Rng rng(2);
        for (int iter = 0; iter < 100; ++iter) {
            auto logits = random_vec(rng, 9, 3.0);
            double c = rng.uniform(-50, 50);
            auto shifted = logits;
            for (auto& v : shifted) v += c;
            auto a = nn::softmax(logits);
            auto b = nn::softmax(shifted);
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
        }
    }
}

TEST_CASE("cross entropy") {
    std::vector<double> onehot = {0.0, 1.0, 0.0};
    CHECK(nn::cross_entropy(onehot, onehot) == 0.0);

    std::vector<double> uniform9(9, 1.0 / 9);
    std::vector<double> target9(9, 0.0);
    target9[4] = 1.0;
    CHECK(nn::cross_entropy(uniform9, target9) == doctest::Approx(std::log(9.0)).epsilon(1e-12));

    std::vector<double> tiny = {1.0, 0.0, 0.0};
    CHECK(nn::cross_entropy(tiny, onehot) <= -std::log(DBL_MIN));
    CHECK(std::isfinite(nn::cross_entropy(tiny, onehot)));

    SUBCASE("fused form agrees with the plain form and stays nonnegative") {
        Rng rng(3);
        for (int iter = 0; iter < 200; ++iter) {
            auto logits = random_vec(rng, 5, 4.0);
            int target = rng.uniform_int(5);
            auto q = nn::softmax(logits);
            std::vector<double> qstar(5, 0.0);
            qstar[target] = 1.0;
            double fused = nn::cross_entropy_logits(logits, target);
            CHECK(fused >= 0.0);
            CHECK(fused == doctest::Approx(nn::cross_entropy(q, qstar)).epsilon(1e-9));
        }
    }
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(17);
    for (int iter = 0; iter < 12; ++iter) {
        int obs = 1 + rng.uniform_int(6);
        int n = rng.uniform_int(3);
        int P = 2 + rng.uniform_int(4);
        int H = 1 + rng.uniform_int(2);
        std::vector<int> hidden;
        for (int l = 0; l < H; ++l) hidden.push_back(2 + rng.uniform_int(7));
        auto spec = tiny_spec(obs, n, P, hidden);
        if (iter % 2 == 0) spec.inflow_mode = comm::InflowMode::concat;
        auto params = nn::init_params(spec, rng.raw());

        auto obs_v = random_vec(rng, spec.obs_dim);
        auto inflow_v = random_vec(rng, spec.comm_in_dim());
        int target = rng.uniform_int(P);
        // Probe the comm head with a fixed random linear functional so both
        // output blocks carry gradient.
        auto probe = random_vec(rng, spec.comm_out_dim());

        auto loss_at = [&](const nn::PolicyParams& p) {
            auto res = nn::forward(p, obs_v, inflow_v);
            double loss = nn::cross_entropy_logits(res.logits, target);
            for (std::size_t k = 0; k < probe.size(); ++k) loss += probe[k] * res.comm_out[k];
            return loss;
        };

        auto res = nn::forward(params, obs_v, inflow_v);
        auto q = nn::softmax(res.logits);
        std::vector<double> d_out(q.begin(), q.end());
        d_out[target] -= 1.0;
        d_out.insert(d_out.end(), probe.begin(), probe.end());

        nn::Gradients analytic;
        analytic.init_like(params);
        nn::Vector d_input;
        nn::backward(params, res.record, d_out, analytic, &d_input);

        auto fd = test_support::finite_difference(params, loss_at);
        CHECK(test_support::grad_relative_error(analytic, fd) < 1e-6);

        // Input gradient against finite differences on the inputs.
        for (std::size_t k = 0; k < obs_v.size() + inflow_v.size(); ++k) {
            auto bump = [&](double h) {
                auto o2 = obs_v;
                auto i2 = inflow_v;
                if (k < o2.size())
                    o2[k] += h;
                else
                    i2[k - o2.size()] += h;
                auto r = nn::forward(params, o2, i2);
                double loss = nn::cross_entropy_logits(r.logits, target);
                for (std::size_t m = 0; m < probe.size(); ++m) loss += probe[m] * r.comm_out[m];
                return loss;
            };
            double fd_k = (bump(1e-5) - bump(-1e-5)) / 2e-5;
            CHECK(d_input[k] == doctest::Approx(fd_k).epsilon(1e-5));
        }
    }
}

TEST_CASE("backward: zero upstream, additive accumulation") {
    Rng rng(23);
    auto spec = tiny_spec(4, 2, 3, {6, 6});
    auto params = nn::init_params(spec, 9);
    auto obs1 = random_vec(rng, 4);
    auto in1 = random_vec(rng, 2);
    auto obs2 = random_vec(rng, 4);
    auto in2 = random_vec(rng, 2);
    auto r1 = nn::forward(params, obs1, in1);
    auto r2 = nn::forward(params, obs2, in2);
    auto d1 = random_vec(rng, spec.output_dim());
    auto d2 = random_vec(rng, spec.output_dim());

    nn::Gradients zero;
    zero.init_like(params);
    std::vector<double> zeros(spec.output_dim(), 0.0);
    nn::backward(params, r1.record, zeros, zero);
    CHECK(zero.norm() == 0.0);

    // Two records accumulated together equal the sum of each alone.
    nn::Gradients both, a, b;
    both.init_like(params);
    a.init_like(params);
    b.init_like(params);
    nn::backward(params, r1.record, d1, both);
    nn::backward(params, r2.record, d2, both);
    nn::backward(params, r1.record, d1, a);
    nn::backward(params, r2.record, d2, b);
    a.add_scaled(b, 1.0);
    CHECK(test_support::grad_relative_error(both, a) < 1e-12);
}

TEST_CASE("adam") {
    auto spec = tiny_spec(1, 0, 2, {1});
    auto params = nn::init_params(spec, 3);
    nn::AdamState state;
    state.init_like(params);

    SUBCASE("zero gradient leaves parameters unchanged") {
        auto before = params;
        nn::Gradients g;
        g.init_like(params);
        nn::adam_step(params, g, state);
        for (std::size_t l = 0; l < params.W.size(); ++l) {
            CHECK(params.W[l].a == before.W[l].a);
            CHECK(params.b[l] == before.b[l]);
        }
    }

    SUBCASE("single scalar step matches hand arithmetic") {
        params.W[0].a[0] = 1.0;
        nn::Gradients g;
        g.init_like(params);
        g.W[0].a[0] = 0.5;
        state.cfg.lr = 0.1;
        nn::adam_step(params, g, state);
        // m=0.1*0.5... with defaults beta1=0.9, beta2=0.999, t=1:
        double m = 0.1 * 0.5, v = 0.001 * 0.25;
        double want = 1.0 - 0.1 * (m / 0.1) / (std::sqrt(v / 0.001) + 1e-8);
        CHECK(params.W[0].a[0] == doctest::Approx(want).epsilon(1e-15));
    }

    SUBCASE("moments keep parameter shapes") {
        CHECK(state.m.W.size() == params.W.size());
        for (std::size_t l = 0; l < params.W.size(); ++l) {
            CHECK(state.m.W[l].a.size() == params.W[l].a.size());
            CHECK(state.v.b[l].size() == params.b[l].size());
        }
    }
}

TEST_CASE("gradient clipping") {
    auto spec = tiny_spec(2, 0, 2, {2});
    auto params = nn::init_params(spec, 5);
    nn::Gradients g;
    g.init_like(params);
    for (auto& m : g.W)
        for (auto& w : m.a) w = 3.0;
    double before = g.norm();
    double reported = nn::clip_grad_norm(g, 5.0);
    CHECK(reported == doctest::Approx(before));
    CHECK(g.norm() == doctest::Approx(5.0).epsilon(1e-12));
    double second = nn::clip_grad_norm(g, 5.0);
    CHECK(second <= 5.0 + 1e-12);
}

TEST_CASE("checkpoint round trip is value-exact") {
    auto tmp = std::filesystem::temp_directory_path() / "swarmlab_ck_test.json";
    auto spec = tiny_spec(5, 3, 6, {7, 4});
    spec.inflow_mode = comm::InflowMode::concat;
    auto params = nn::init_params(spec, 101);
    nn::AdamState adam;
    adam.cfg.lr = 3e-4;
    adam.init_like(params);
    adam.t = 17;
    adam.m.W[0].a[0] = 0.123456789012345678;

    nn::save_checkpoint(tmp, params, &adam);
    auto ck = nn::load_checkpoint(tmp);

    CHECK(ck.params.spec.P == spec.P);
    CHECK(ck.params.spec.obs_dim == spec.obs_dim);
    CHECK(ck.params.spec.comm_size == spec.comm_size);
    CHECK((ck.params.spec.inflow_mode == spec.inflow_mode));
    CHECK(ck.params.spec.hidden == spec.hidden);
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        CHECK(ck.params.W[l].a == params.W[l].a);  // exact doubles
        CHECK(ck.params.b[l] == params.b[l]);
    }
    REQUIRE(ck.adam.has_value());
    CHECK(ck.adam->t == 17);
    CHECK(ck.adam->cfg.lr == 3e-4);
    CHECK(ck.adam->m.W[0].a[0] == adam.m.W[0].a[0]);
    std::filesystem::remove(tmp);

    CHECK_THROWS_AS(nn::load_checkpoint("/nonexistent/checkpoint.json"), CheckpointNotFound);
}
