#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ganlab/data.hpp"
#include "ganlab/eval.hpp"
#include "ganlab/gan.hpp"
#include "ganlab/regularizers.hpp"

namespace ganlab {

enum class TrainMode { Baseline, AugRealOnly, AugRealFake, Bcr, Cntr, CntrBcr };

const char* mode_name(TrainMode m);
TrainMode mode_from_name(const std::string& name);
bool mode_uses_bcr(TrainMode m);
bool mode_uses_cntr(TrainMode m);

struct AdamConfig {
    double lr_g = 2e-4, lr_d = 2e-4;
    double beta1 = 0.0, beta2 = 0.999, eps = 1e-8;
};

struct TrainConfig {
    TrainMode mode = TrainMode::Baseline;
    std::vector<AugmentSpec> chain;  // empty means identity; at most two links
    std::size_t batch = 64;
    std::size_t total_steps = 2000;
    std::size_t disc_steps = 1;
    AdamConfig adam;
    BcrConfig bcr;
    CntrConfig cntr;
    bool anneal = false;
    std::uint64_t seed = 0;
    std::size_t eval_interval = 0;   // 0 disables periodic evaluation
    std::size_t eval_samples = 256;  // per side; must exceed the feature dim
    GanConfig gan;

    void validate() const;
};

struct StepMetrics {
    std::size_t step = 0;
    double l_d = 0.0, l_g = 0.0;
    double l_bcr = 0.0, l_cntr = 0.0;
    bool has_bcr = false, has_cntr = false;
    // strength of each chain link after annealing, for logging
    std::vector<double> strengths;
};

struct EvalPoint {
    std::size_t step = 0;
    double proxy_fid = 0.0;
};

struct RunRecord {
    std::vector<StepMetrics> steps;
    std::vector<EvalPoint> evals;
    double final_proxy_fid = 0.0;
    GanState state;
};

// Standard bias-corrected Adam. `step` is 1-based.
void adam_update(ParamTensor& p, const Tensor& grad, std::size_t step, double lr,
                 const AdamConfig& cfg);

// Linear decay lambda0 * (1 - step/total), exact 0 at step == total.
double anneal_strength(double lambda0, std::size_t step, std::size_t total);

struct TrainStreams {
    RngStream latent, aug, data;
    explicit TrainStreams(std::uint64_t seed)
        : latent(seed, "latent"), aug(seed, "aug"), data(seed, "data") {}
};

// One discriminator update followed by one generator update.
StepMetrics train_step(GanState& state, const TrainConfig& cfg, const Tensor& real,
                       TrainStreams& streams);

// Full training run over `data`; evaluates against a fixed subset of the
// dataset every eval_interval steps when `fx` is provided. `on_eval` fires at
// every evaluation point (sample-grid emission etc.).
using EvalHook = std::function<void(const GanState&, std::size_t step, double proxy_fid)>;
RunRecord run(const TrainConfig& cfg, const Dataset& data, const FeatureExtractor* fx = nullptr,
              const EvalHook& on_eval = nullptr);

}  // namespace ganlab
