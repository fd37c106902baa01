#include "swarmlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "swarmlab/errors.hpp"
#include "swarmlab/eval.hpp"
#include "swarmlab/parallel.hpp"

namespace swarmlab::trainer {

void TrainConfig::validate() const {
    if (n_batch < 1) throw ConfigMismatch("train.n_batch must be >= 1");
    if (ell < 1) throw ConfigMismatch("train.ell must be >= 1");
    if (updates < 1) throw ConfigMismatch("train.updates must be >= 1");
    if (K_train < 1) throw ConfigMismatch("train.K_train must be >= 1");
    if (comm_size < 0) throw ConfigMismatch("train.comm_size must be >= 0");
    if (hidden.empty()) throw ConfigMismatch("train.hidden must name at least one layer");
}

nn::PolicySpec make_policy_spec(world::Task task, const world::WorldConfig& cfg,
                                const TrainConfig& tcfg) {
    nn::PolicySpec spec;
    spec.task = task == world::Task::rendezvous ? "rendezvous" : "assignment";
    spec.P = cfg.disc.P;
    spec.obs_dim = task == world::Task::rendezvous ? cfg.disc.P : 3 * cfg.disc.P;
    spec.comm_size = tcfg.comm_size;
    spec.inflow_mode = tcfg.inflow_mode;
    spec.hidden = tcfg.hidden;
    spec.activation = tcfg.activation;
    return spec;
}

SimWorker::SimWorker(world::Task task, const world::WorldConfig& cfg, std::uint64_t master_seed,
                     std::uint64_t sim_id)
    : task_(task),
      cfg_(cfg),
      master_seed_(master_seed),
      sim_id_(sim_id),
      comm_(cfg.K),
      rng_(Rng::derive(Rng::derive(master_seed, sim_id), 0x5A11)) {
    respawn();
}

void SimWorker::respawn() {
    std::uint64_t seed = Rng::derive(Rng::derive(master_seed_, sim_id_), episode_++);
    inst_ = world::spawn(task_, cfg_, seed);
    comm_.reset();
    t_ = 1;
}

void SimWorker::ensure_live() {
    if (t_ > 1 && (world::task_done(task_, inst_, cfg_) || t_ > cfg_.L)) respawn();
}

std::vector<int> oracle_targets(world::Task task, const world::TaskInstance& inst,
                                const world::WorldConfig& cfg, const TrainConfig& tcfg) {
    auto state = policy::GlobalState::from(inst);
    std::vector<policy::ActionDistribution> dists;
    if (task == world::Task::rendezvous) {
        dists = policy::oracle_rendezvous(state, cfg.disc);
    } else {
        auto asg = policy::bottleneck_assignment(state.positions, state.targets, tcfg.objective);
        dists = policy::oracle_assignment(state, asg, cfg.disc, cfg.epsilon);
    }
    std::vector<int> targets(dists.size());
    for (std::size_t i = 0; i < dists.size(); ++i) targets[i] = dists[i].argmax();
    return targets;
}

WindowTape SimWorker::rollout(const nn::PolicyParams& params, const TrainConfig& tcfg) {
    const auto& spec = params.spec;
    const int K = cfg_.K;
    const int n = spec.comm_size;
    auto offsets = geom::action_offsets(cfg_.disc);

    WindowTape tape;
    tape.K = K;
    tape.ell = tcfg.ell;
    tape.window_start_t = t_;
    tape.steps.resize(tcfg.ell);
    tape.positions.resize(tcfg.ell);

    for (int tau = 0; tau < tcfg.ell; ++tau) {
        auto graph = world::connectivity(inst_, cfg_);
        auto targets = oracle_targets(task_, inst_, cfg_, tcfg);

        auto& recs = tape.steps[tau];
        recs.resize(K);
        tape.positions[tau].resize(K);
        std::vector<geom::Vec2> setpoints(K);

        for (int i = 0; i < K; ++i) {
            tape.positions[tau][i] = inst_.agents[i].pos;
            auto& rec = recs[i];
            auto obs = world::observe(inst_, graph, i, cfg_);
            rec.obs.assign(obs.begin(), obs.end());
            rec.target = targets[i];

            auto groups = comm::assign_groups(graph, inst_, i, cfg_.disc);
            comm::CommBundle inflow;
            inflow.mode = spec.inflow_mode;
            inflow.groups.assign(spec.P, comm::CommVector(n, 0.0));
            if (n > 0) {
                auto agg = comm::aggregate_inflow(comm_.inbox(i), groups, spec.inflow_mode, n);
                inflow = std::move(agg.bundle);
                rec.routes.reserve(agg.contributions.size());
                for (const auto& c : agg.contributions)
                    rec.routes.push_back({c.sender, c.sender_block, c.recv_group, c.weight});
            }
            rec.inflow = inflow.flatten();

            auto res = nn::forward(params, rec.obs, rec.inflow);
            auto q = nn::softmax(res.logits);
            rec.action = rng_.categorical(q);
            setpoints[i] = offsets[rec.action];

            if (n > 0) {
                comm::CommBundle outflow;
                outflow.mode = comm::InflowMode::concat;
                outflow.groups.resize(spec.P);
                for (int p = 0; p < spec.P; ++p) {
                    if (spec.inflow_mode == comm::InflowMode::sum) {
                        outflow.groups[p] = res.comm_out;
                    } else {
                        outflow.groups[p].assign(
                            res.comm_out.begin() + static_cast<std::size_t>(p) * n,
                            res.comm_out.begin() + static_cast<std::size_t>(p + 1) * n);
                    }
                }
                for (auto& o : comm::fanout_outflow(outflow, groups)) {
                    int block = spec.inflow_mode == comm::InflowMode::sum ? 0 : o.group;
                    comm_.post(i, o.receiver, block, std::move(o.payload));
                }
            }
            rec.fwd = std::move(res.record);
        }
        if (n > 0) comm_.advance();
        world::step(inst_, setpoints, cfg_);
        ++t_;
    }
    return tape;
}

namespace {

// Per-record gradient of the fused softmax cross entropy w.r.t. the logits.
void softmax_ce_grad(std::span<const double> logits, int target, double scale,
                     std::vector<double>& d_logits) {
    auto q = nn::softmax(logits);
    d_logits.assign(q.begin(), q.end());
    d_logits[target] -= 1.0;
    for (auto& g : d_logits) g *= scale;
}

}  // namespace

BpttResult bptt(const WindowTape& tape, const nn::PolicyParams& params, nn::Gradients& grads) {
    const auto& spec = params.spec;
    const int P = spec.P;
    const int n = spec.comm_size;
    const int comm_dim = spec.comm_out_dim();
    const double scale = 1.0 / (static_cast<double>(tape.K) * tape.ell);

    BpttResult result;
    // Gradient w.r.t. each agent-step's comm head, filled by later steps.
    std::vector<std::vector<nn::Vector>> pending(
        tape.ell, std::vector<nn::Vector>(tape.K, nn::Vector(comm_dim, 0.0)));

    std::vector<double> d_out;
    std::vector<double> d_logits;
    for (int tau = tape.ell - 1; tau >= 0; --tau) {
        for (int i = 0; i < tape.K; ++i) {
            const auto& rec = tape.steps[tau][i];
            std::span<const double> logits(rec.fwd.out.data(), static_cast<std::size_t>(P));
            result.loss += scale * nn::cross_entropy_logits(logits, rec.target);
            ++result.records;
            int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                                        logits.begin());
            if (pred == rec.target) ++result.agree;

            softmax_ce_grad(logits, rec.target, scale, d_logits);
            d_out.assign(d_logits.begin(), d_logits.end());
            d_out.insert(d_out.end(), pending[tau][i].begin(), pending[tau][i].end());

            nn::Vector d_input;
            nn::backward(params, rec.fwd, d_out, grads, &d_input);

            if (tau == 0 || n == 0) continue;  // window-entry inflow is a constant
            // Route the inflow gradient back to the senders' comm heads.
            std::span<const double> d_inflow(d_input.data() + spec.obs_dim,
                                             static_cast<std::size_t>(spec.comm_in_dim()));
            for (const auto& route : rec.routes) {
                auto& dst = pending[tau - 1][route.sender];
                if (spec.inflow_mode == comm::InflowMode::sum) {
                    for (int k = 0; k < n; ++k) dst[k] += route.weight * d_inflow[k];
                } else {
                    const double* src = d_inflow.data() + static_cast<std::size_t>(route.recv_block) * n;
                    double* out = dst.data() + static_cast<std::size_t>(route.sender_block) * n;
                    for (int k = 0; k < n; ++k) out[k] += route.weight * src[k];
                }
            }
        }
    }
    return result;
}

double window_loss(const WindowTape& tape, const nn::PolicyParams& params) {
    const auto& spec = params.spec;
    const int P = spec.P;
    const int n = spec.comm_size;

    double loss = 0.0;
    std::vector<std::vector<nn::Vector>> comm_out(tape.ell,
                                                  std::vector<nn::Vector>(tape.K));
    for (int tau = 0; tau < tape.ell; ++tau) {
        for (int i = 0; i < tape.K; ++i) {
            const auto& rec = tape.steps[tau][i];
            std::vector<double> inflow;
            if (tau == 0 || n == 0) {
                inflow = rec.inflow;
            } else {
                // Rebuild the bundle from the recorded routes so the mean is
                // accumulated exactly as in the rollout.
                comm::CommBundle bundle;
                bundle.mode = spec.inflow_mode;
                bundle.groups.assign(P, comm::CommVector(n, 0.0));
                std::vector<double> weight(P, 0.0);
                for (const auto& route : rec.routes) {
                    const auto& src = comm_out[tau - 1][route.sender];
                    auto& acc = bundle.groups[route.recv_block];
                    const double* block =
                        src.data() + static_cast<std::size_t>(route.sender_block) * n;
                    for (int k = 0; k < n; ++k) acc[k] += block[k];
                    weight[route.recv_block] = route.weight;
                }
                for (int p = 0; p < P; ++p) {
                    if (weight[p] == 0.0) continue;
                    for (auto& v : bundle.groups[p]) v *= weight[p];
                }
                inflow = bundle.flatten();
            }
            auto res = nn::forward(params, rec.obs, inflow);
            comm_out[tau][i] = std::move(res.comm_out);
            loss += nn::cross_entropy_logits(res.logits, rec.target);
        }
    }
    return loss / (static_cast<double>(tape.K) * tape.ell);
}

namespace {

using nlohmann::json;

void write_metrics_line(std::ofstream& out, const UpdateStats& s) {
    json j{{"update", s.update}, {"loss", s.loss}, {"agreement", s.agreement}};
    if (s.eval_cr) j["eval_CR"] = *s.eval_cr;
    if (s.eval_mean_t) j["eval_mean_tRV"] = *s.eval_mean_t;
    out << j.dump() << '\n';
}

}  // namespace

TrainResult train(world::Task task, const world::WorldConfig& cfg, const TrainConfig& tcfg,
                  const std::filesystem::path& out_dir, int workers,
                  const TrainCallback& callback) {
    tcfg.validate();
    world::WorldConfig wc = cfg;
    wc.K = tcfg.K_train;
    wc.validate();

    auto spec = make_policy_spec(task, wc, tcfg);
    auto params = nn::init_params(spec, Rng::derive(tcfg.seed, 0x1217));
    nn::AdamState adam;
    adam.cfg = tcfg.adam;
    adam.init_like(params);

    std::vector<SimWorker> sims;
    sims.reserve(tcfg.n_batch);
    for (int b = 0; b < tcfg.n_batch; ++b) sims.emplace_back(task, wc, tcfg.seed, b);

    std::ofstream metrics;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        metrics.open(out_dir / "metrics.jsonl");
    }

    std::vector<WindowTape> tapes(tcfg.n_batch);
    std::vector<nn::Gradients> sim_grads(tcfg.n_batch);
    std::vector<BpttResult> sim_results(tcfg.n_batch);
    for (auto& g : sim_grads) g.init_like(params);
    nn::Gradients grads;
    grads.init_like(params);

    TrainResult result;
    for (int update = 1; update <= tcfg.updates; ++update) {
        parallel_for(tcfg.n_batch, workers, [&](int b) {
            sims[b].ensure_live();
            tapes[b] = sims[b].rollout(params, tcfg);
            sim_grads[b].zero();
            sim_results[b] = bptt(tapes[b], params, sim_grads[b]);
        });

        grads.zero();
        double loss = 0.0;
        int agree = 0, records = 0;
        for (int b = 0; b < tcfg.n_batch; ++b) {  // fixed reduction order
            grads.add_scaled(sim_grads[b], 1.0 / tcfg.n_batch);
            loss += sim_results[b].loss / tcfg.n_batch;
            agree += sim_results[b].agree;
            records += sim_results[b].records;
        }
        if (!std::isfinite(loss))
            throw Diverged("training loss became non-finite at update " +
                           std::to_string(update));

        UpdateStats stats;
        stats.update = update;
        stats.loss = loss;
        stats.agreement = records > 0 ? static_cast<double>(agree) / records : 0.0;
        stats.grad_norm = nn::clip_grad_norm(grads, tcfg.grad_clip);
        nn::adam_step(params, grads, adam);

        if (tcfg.eval_every > 0 &&
            (update % tcfg.eval_every == 0 || update == tcfg.updates)) {
            policy::LearnedControllerOptions opts;
            opts.argmax = tcfg.eval_argmax;
            auto factory = [&]() {
                return policy::make_learned_controller(params, opts);
            };
            auto set = eval::run_trials(task, wc, factory, tcfg.eval_trials,
                                        Rng::derive(tcfg.seed, 0xE7A1 + update), workers,
                                        "learned");
            stats.eval_cr = set.summary.cr_percent;
            stats.eval_mean_t = set.summary.mean_t;
        }

        if (metrics.is_open()) write_metrics_line(metrics, stats);
        if (callback) callback(stats);
        result.history.push_back(stats);

        if (!out_dir.empty() && tcfg.checkpoint_every > 0 &&
            update % tcfg.checkpoint_every == 0 && update != tcfg.updates) {
            nn::save_checkpoint(out_dir / ("checkpoint_" + std::to_string(update) + ".json"),
                                params, &adam);
        }
    }

    if (!out_dir.empty()) {
        result.checkpoint_path = out_dir / "checkpoint_final.json";
        nn::save_checkpoint(result.checkpoint_path, params, &adam);
    }
    result.params = std::move(params);
    return result;
}

}  // namespace swarmlab::trainer
