#include "swarmlab/config.hpp"

#include <fstream>

#include <json.hpp>

#include "swarmlab/errors.hpp"

namespace swarmlab::config {

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_world(const json& j, world::WorldConfig& w) {
    maybe(j, "K", w.K);
    maybe(j, "d_lim", w.d_lim);
    maybe(j, "dt", w.dt);
    maybe(j, "kp", w.kp);
    maybe(j, "kd", w.kd);
    maybe(j, "epsilon", w.epsilon);
    maybe(j, "L", w.L);
    maybe(j, "density", w.density);
    maybe(j, "spawn_max_attempts", w.spawn_max_attempts);
    if (j.contains("disc")) {
        const auto& d = j.at("disc");
        maybe(d, "P", w.disc.P);
        w.disc.d_lim = w.d_lim;
        w.disc.inner_radius = 0.2 * w.d_lim;
        maybe(d, "inner_radius", w.disc.inner_radius);
    } else {
        w.disc.d_lim = w.d_lim;
        w.disc.inner_radius = 0.2 * w.d_lim;
    }
    if (j.contains("potential_field")) {
        const auto& p = j.at("potential_field");
        maybe(p, "enabled", w.potential_field.enabled);
        maybe(p, "repulse_radius", w.potential_field.repulse_radius);
        maybe(p, "repulse_gain", w.potential_field.repulse_gain);
    }
}

void parse_train(const json& j, trainer::TrainConfig& t) {
    maybe(j, "n_batch", t.n_batch);
    maybe(j, "ell", t.ell);
    maybe(j, "updates", t.updates);
    maybe(j, "K_train", t.K_train);
    maybe(j, "comm_size", t.comm_size);
    if (j.contains("inflow_mode")) {
        std::string mode = j.at("inflow_mode").get<std::string>();
        if (mode == "sum")
            t.inflow_mode = comm::InflowMode::sum;
        else if (mode == "concat")
            t.inflow_mode = comm::InflowMode::concat;
        else
            throw ConfigMismatch("train.inflow_mode must be 'sum' or 'concat'");
    }
    maybe(j, "hidden", t.hidden);
    if (j.contains("activation")) {
        std::string act = j.at("activation").get<std::string>();
        if (act == "tanh")
            t.activation = nn::Activation::tanh;
        else if (act == "relu")
            t.activation = nn::Activation::relu;
        else
            throw ConfigMismatch("train.activation must be 'tanh' or 'relu'");
    }
    maybe(j, "lr", t.adam.lr);
    maybe(j, "beta1", t.adam.beta1);
    maybe(j, "beta2", t.adam.beta2);
    maybe(j, "adam_eps", t.adam.eps);
    maybe(j, "grad_clip", t.grad_clip);
    maybe(j, "eval_every", t.eval_every);
    maybe(j, "eval_trials", t.eval_trials);
    maybe(j, "checkpoint_every", t.checkpoint_every);
    if (j.contains("eval_action")) {
        std::string a = j.at("eval_action").get<std::string>();
        if (a == "argmax")
            t.eval_argmax = true;
        else if (a == "sample")
            t.eval_argmax = false;
        else
            throw ConfigMismatch("train.eval_action must be 'sample' or 'argmax'");
    }
    if (j.contains("assignment_objective")) {
        std::string o = j.at("assignment_objective").get<std::string>();
        if (o == "bottleneck")
            t.objective = policy::AssignmentObjective::bottleneck;
        else if (o == "sum")
            t.objective = policy::AssignmentObjective::sum;
        else
            throw ConfigMismatch("train.assignment_objective must be 'bottleneck' or 'sum'");
    }
    maybe(j, "reassign_every_step", t.reassign_every_step);
}

}  // namespace

RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigMismatch("cannot open config file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigMismatch("config parse error: " + std::string(e.what()));
    }

    try {
        RunConfig cfg;
        if (!doc.contains("version")) throw ConfigMismatch("config: missing 'version' field");
        cfg.version = doc.at("version").get<int>();
        if (cfg.version != 1) throw ConfigMismatch("config: unsupported version");

        std::string task = doc.value("task", "rendezvous");
        if (task == "rendezvous")
            cfg.task = world::Task::rendezvous;
        else if (task == "assignment")
            cfg.task = world::Task::assignment;
        else
            throw ConfigMismatch("config: unknown task '" + task + "'");

        maybe(doc, "seed", cfg.seed);
        if (doc.contains("out_dir")) cfg.out_dir = doc.at("out_dir").get<std::string>();
        if (doc.contains("world")) parse_world(doc.at("world"), cfg.world);
        if (doc.contains("train")) parse_train(doc.at("train"), cfg.train);
        if (doc.contains("eval")) {
            const auto& e = doc.at("eval");
            maybe(e, "n_trials", cfg.eval.n_trials);
            maybe(e, "K_list", cfg.eval.K_list);
            maybe(e, "policies", cfg.eval.policies);
        }
        cfg.train.seed = cfg.seed;
        cfg.world.validate();
        cfg.train.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigMismatch("config schema error: " + std::string(e.what()));
    }
}

}  // namespace swarmlab::config
