#include "swarmlab/nn.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "swarmlab/errors.hpp"
#include "swarmlab/rng.hpp"

namespace swarmlab::nn {

namespace {

std::vector<int> layer_dims(const PolicySpec& spec) {
    std::vector<int> dims;
    dims.push_back(spec.input_dim());
    for (int h : spec.hidden) dims.push_back(h);
    dims.push_back(spec.output_dim());
    return dims;
}

double activate(double z, Activation act) {
    return act == Activation::tanh ? std::tanh(z) : std::max(z, 0.0);
}

// Derivative expressed through the post-activation value.
double activate_grad(double h, Activation act) {
    return act == Activation::tanh ? 1.0 - h * h : (h > 0.0 ? 1.0 : 0.0);
}

void matvec(const Matrix& W, const Vector& b, std::span<const double> x, Vector& y) {
    y.resize(W.rows);
    for (int r = 0; r < W.rows; ++r) {
        const double* row = &W.a[static_cast<std::size_t>(r) * W.cols];
        double acc = b[r];
        for (int c = 0; c < W.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace

std::size_t PolicyParams::count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l) n += W[l].a.size() + b[l].size();
    return n;
}

PolicyParams init_params(const PolicySpec& spec, std::uint64_t seed) {
    PolicyParams p;
    p.spec = spec;
    Rng rng(seed);
    auto dims = layer_dims(spec);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix W(dims[l + 1], dims[l]);
        double bound = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
        for (auto& w : W.a) w = rng.uniform(-bound, bound);
        p.W.push_back(std::move(W));
        p.b.emplace_back(dims[l + 1], 0.0);
    }
    return p;
}

ForwardResult forward(const PolicyParams& params, std::span<const double> obs,
                      std::span<const double> inflow) {
    const auto& spec = params.spec;
    if (static_cast<int>(obs.size()) != spec.obs_dim ||
        static_cast<int>(inflow.size()) != spec.comm_in_dim())
        throw LengthMismatch("forward: input lengths do not match the policy spec");

    ForwardResult res;
    res.record.input.reserve(obs.size() + inflow.size());
    res.record.input.assign(obs.begin(), obs.end());
    res.record.input.insert(res.record.input.end(), inflow.begin(), inflow.end());

    const Vector* x = &res.record.input;
    const std::size_t n_hidden = params.W.size() - 1;
    res.record.acts.resize(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        matvec(params.W[l], params.b[l], *x, res.record.acts[l]);
        for (auto& h : res.record.acts[l]) h = activate(h, spec.activation);
        x = &res.record.acts[l];
    }
    matvec(params.W.back(), params.b.back(), *x, res.record.out);

    res.logits.assign(res.record.out.begin(), res.record.out.begin() + spec.P);
    res.comm_out.assign(res.record.out.begin() + spec.P, res.record.out.end());
    return res;
}

void Gradients::init_like(const PolicyParams& params) {
    W.clear();
    b.clear();
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        W.emplace_back(params.W[l].rows, params.W[l].cols);
        b.emplace_back(params.b[l].size(), 0.0);
    }
}

void Gradients::zero() {
    for (auto& m : W) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void Gradients::add_scaled(const Gradients& other, double s) {
    for (std::size_t l = 0; l < W.size(); ++l) {
        for (std::size_t i = 0; i < W[l].a.size(); ++i) W[l].a[i] += s * other.W[l].a[i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += s * other.b[l][i];
    }
}

double Gradients::norm() const {
    double s = 0.0;
    for (const auto& m : W)
        for (double w : m.a) s += w * w;
    for (const auto& v : b)
        for (double w : v) s += w * w;
    return std::sqrt(s);
}

void backward(const PolicyParams& params, const ForwardRecord& record,
              std::span<const double> d_out, Gradients& grads, Vector* d_input) {
    const auto& spec = params.spec;
    const std::size_t L = params.W.size();
    Vector delta(d_out.begin(), d_out.end());

    for (std::size_t l = L; l-- > 0;) {
        const Vector& below = l == 0 ? record.input : record.acts[l - 1];
        Matrix& gW = grads.W[l];
        Vector& gb = grads.b[l];
        for (int r = 0; r < params.W[l].rows; ++r) {
            gb[r] += delta[r];
            double* grow = &gW.a[static_cast<std::size_t>(r) * gW.cols];
            const double d = delta[r];
            for (int c = 0; c < params.W[l].cols; ++c) grow[c] += d * below[c];
        }
        if (l == 0 && d_input == nullptr) break;
        Vector next(params.W[l].cols, 0.0);
        for (int r = 0; r < params.W[l].rows; ++r) {
            const double* row = &params.W[l].a[static_cast<std::size_t>(r) * params.W[l].cols];
            const double d = delta[r];
            for (int c = 0; c < params.W[l].cols; ++c) next[c] += row[c] * d;
        }
        if (l > 0) {
            for (std::size_t i = 0; i < next.size(); ++i)
                next[i] *= activate_grad(record.acts[l - 1][i], spec.activation);
        }
        delta = std::move(next);
    }
    if (d_input) *d_input = std::move(delta);
}

Vector softmax(std::span<const double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    Vector q(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        q[i] = std::exp(logits[i] - mx);
        sum += q[i];
    }
    for (auto& v : q) v /= sum;
    return q;
}

double cross_entropy(std::span<const double> q, std::span<const double> q_star) {
    if (q.size() != q_star.size()) throw LengthMismatch("cross_entropy: size mismatch");
    std::size_t target = static_cast<std::size_t>(
        std::max_element(q_star.begin(), q_star.end()) - q_star.begin());
    return -std::log(std::max(q[target], DBL_MIN));
}

double cross_entropy_logits(std::span<const double> logits, int target) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    return mx + std::log(sum) - logits[target];
}

void AdamState::init_like(const PolicyParams& params) {
    t = 0;
    m.init_like(params);
    v.init_like(params);
}

void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state) {
    const auto& c = state.cfg;
    ++state.t;
    double bc1 = 1.0 - std::pow(c.beta1, state.t);
    double bc2 = 1.0 - std::pow(c.beta2, state.t);
    auto update = [&](double& p, double& m, double& v, double g) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        p -= c.lr * (m / bc1) / (std::sqrt(v / bc2) + c.eps);
    };
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        for (std::size_t i = 0; i < params.W[l].a.size(); ++i)
            update(params.W[l].a[i], state.m.W[l].a[i], state.v.W[l].a[i], grads.W[l].a[i]);
        for (std::size_t i = 0; i < params.b[l].size(); ++i)
            update(params.b[l][i], state.m.b[l][i], state.v.b[l][i], grads.b[l][i]);
    }
}

double clip_grad_norm(Gradients& grads, double max_norm) {
    double n = grads.norm();
    if (n > max_norm && n > 0.0) {
        double s = max_norm / n;
        for (auto& m : grads.W)
            for (double& w : m.a) w *= s;
        for (auto& v : grads.b)
            for (double& w : v) w *= s;
    }
    return n;
}

namespace {

using nlohmann::json;

json spec_to_json(const PolicySpec& s) {
    return json{{"task", s.task},
                {"P", s.P},
                {"obs_dim", s.obs_dim},
                {"comm_size", s.comm_size},
                {"inflow_mode", s.inflow_mode == comm::InflowMode::sum ? "sum" : "concat"},
                {"hidden", s.hidden},
                {"activation", s.activation == Activation::tanh ? "tanh" : "relu"}};
}

PolicySpec spec_from_json(const json& j) {
    PolicySpec s;
    s.task = j.at("task").get<std::string>();
    s.P = j.at("P").get<int>();
    s.obs_dim = j.at("obs_dim").get<int>();
    s.comm_size = j.at("comm_size").get<int>();
    std::string mode = j.at("inflow_mode").get<std::string>();
    if (mode != "sum" && mode != "concat")
        throw ConfigMismatch("checkpoint: unknown inflow_mode '" + mode + "'");
    s.inflow_mode = mode == "sum" ? comm::InflowMode::sum : comm::InflowMode::concat;
    s.hidden = j.at("hidden").get<std::vector<int>>();
    std::string act = j.at("activation").get<std::string>();
    if (act != "tanh" && act != "relu")
        throw ConfigMismatch("checkpoint: unknown activation '" + act + "'");
    s.activation = act == "tanh" ? Activation::tanh : Activation::relu;
    return s;
}

json layers_to_json(const std::vector<Matrix>& W, const std::vector<Vector>& b) {
    json layers = json::array();
    for (std::size_t l = 0; l < W.size(); ++l) {
        layers.push_back(
            json{{"rows", W[l].rows}, {"cols", W[l].cols}, {"w", W[l].a}, {"b", b[l]}});
    }
    return layers;
}

void layers_from_json(const json& layers, std::vector<Matrix>& W, std::vector<Vector>& b) {
    W.clear();
    b.clear();
    for (const auto& jl : layers) {
        Matrix m(jl.at("rows").get<int>(), jl.at("cols").get<int>());
        auto w = jl.at("w").get<std::vector<double>>();
        if (w.size() != m.a.size()) throw ConfigMismatch("checkpoint: weight array size mismatch");
        m.a = std::move(w);
        W.push_back(std::move(m));
        b.push_back(jl.at("b").get<Vector>());
        if (static_cast<int>(b.back().size()) != W.back().rows)
            throw ConfigMismatch("checkpoint: bias array size mismatch");
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const AdamState* adam) {
    json doc;
    doc["version"] = 1;
    doc["task"] = params.spec.task;
    doc["policy"] = spec_to_json(params.spec);
    doc["layers"] = layers_to_json(params.W, params.b);
    if (adam) {
        doc["adam"] = json{{"t", adam->t},
                           {"lr", adam->cfg.lr},
                           {"beta1", adam->cfg.beta1},
                           {"beta2", adam->cfg.beta2},
                           {"eps", adam->cfg.eps},
                           {"m", layers_to_json(adam->m.W, adam->m.b)},
                           {"v", layers_to_json(adam->v.W, adam->v.b)}};
    }
    std::ofstream out(path);
    if (!out) throw ConfigMismatch("cannot write checkpoint: " + path.string());
    out << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointNotFound(path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigMismatch("checkpoint parse error: " + std::string(e.what()));
    }
    try {
        if (doc.at("version").get<int>() != 1)
            throw ConfigMismatch("checkpoint: unsupported version");
        Checkpoint ck;
        ck.params.spec = spec_from_json(doc.at("policy"));
        layers_from_json(doc.at("layers"), ck.params.W, ck.params.b);
        if (doc.contains("adam")) {
            const auto& ja = doc.at("adam");
            AdamState st;
            st.t = ja.at("t").get<long>();
            st.cfg.lr = ja.at("lr").get<double>();
            st.cfg.beta1 = ja.at("beta1").get<double>();
            st.cfg.beta2 = ja.at("beta2").get<double>();
            st.cfg.eps = ja.at("eps").get<double>();
            layers_from_json(ja.at("m"), st.m.W, st.m.b);
            layers_from_json(ja.at("v"), st.v.W, st.v.b);
            ck.adam = std::move(st);
        }
        return ck;
    } catch (const json::exception& e) {
        throw ConfigMismatch("checkpoint schema error: " + std::string(e.what()));
    }
}

}  // namespace swarmlab::nn
