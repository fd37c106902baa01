#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmlab/comm.hpp"

namespace swarmlab::nn {

using Vector = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Activation { tanh, relu };

// Semantic shape of one experiment's policy network. The raw layer dimensions
// derive from it: input = obs_dim + inflow, output = P action logits followed
// by the comm head (P*n blocks in concat mode, one n block in sum mode).
struct PolicySpec {
    std::string task = "rendezvous";
    int P = 9;
    int obs_dim = 9;
    int comm_size = 25;
    comm::InflowMode inflow_mode = comm::InflowMode::sum;
    std::vector<int> hidden = {32, 32};
    Activation activation = Activation::tanh;

    int comm_in_dim() const {
        return inflow_mode == comm::InflowMode::sum ? comm_size : P * comm_size;
    }
    int comm_out_dim() const { return comm_in_dim(); }
    int comm_blocks() const {
        if (comm_size == 0) return 0;
        return inflow_mode == comm::InflowMode::sum ? 1 : P;
    }
    int input_dim() const { return obs_dim + comm_in_dim(); }
    int output_dim() const { return P + comm_out_dim(); }
};

struct PolicyParams {
    PolicySpec spec;
    std::vector<Matrix> W;  // layer l maps activation[l] -> pre-activation[l+1]
    std::vector<Vector> b;

    std::size_t count() const;
};

PolicyParams init_params(const PolicySpec& spec, std::uint64_t seed);

// Cached forward pass of one agent-step, sufficient for exact reverse-mode.
struct ForwardRecord {
    Vector input;
    std::vector<Vector> acts;  // post-activation per hidden layer
    Vector out;                // raw outputs: logits then comm head
};

struct ForwardResult {
    Vector logits;
    Vector comm_out;
    ForwardRecord record;
};

ForwardResult forward(const PolicyParams& params, std::span<const double> obs,
                      std::span<const double> inflow);

struct Gradients {
    std::vector<Matrix> W;
    std::vector<Vector> b;

    void init_like(const PolicyParams& params);
    void zero();
    void add_scaled(const Gradients& other, double s);
    double norm() const;
};

// Accumulates parameter gradients (additive across calls) and returns the
// input gradient through d_input. d_out is the gradient w.r.t. the raw
// outputs (pre-softmax logits and comm head).
void backward(const PolicyParams& params, const ForwardRecord& record,
              std::span<const double> d_out, Gradients& grads, Vector* d_input = nullptr);

Vector softmax(std::span<const double> logits);

// -log q[argmax q*], clamped below so the loss stays finite for q -> 0.
double cross_entropy(std::span<const double> q, std::span<const double> q_star);

// Fused numerically-stable form: logsumexp(logits) - logits[target].
double cross_entropy_logits(std::span<const double> logits, int target);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long t = 0;
    Gradients m;
    Gradients v;

    void init_like(const PolicyParams& params);
};

void adam_step(PolicyParams& params, const Gradients& grads, AdamState& state);

// Scales gradients so the global norm is at most max_norm; returns the
// pre-clip norm.
double clip_grad_norm(Gradients& grads, double max_norm);

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const AdamState* adam = nullptr);

struct Checkpoint {
    PolicyParams params;
    std::optional<AdamState> adam;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swarmlab::nn
