#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganlab/rng.hpp"
#include "ganlab/tape.hpp"

namespace ganlab {

// Compact MLP generator/discriminator over flattened images. Augmentations
// act on the image-shaped tensor before flattening, so spatial transforms
// stay meaningful.
struct GanConfig {
    std::size_t latent_dim = 32;
    std::size_t channels = 3;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t g_hidden = 256;
    std::size_t d_hidden1 = 256;
    std::size_t d_hidden2 = 128;  // hidden representation fed to the projection head
    std::size_t proj_hidden = 128;
    std::size_t embed_dim = 64;
    double leaky_slope = 0.2;
    bool contrastive = false;  // whether the projection head exists

    std::size_t image_size() const { return channels * height * width; }
    std::uint64_t fingerprint() const;
};

struct ParamTensor {
    std::string name;
    Tensor value;
    Tensor adam_m;
    Tensor adam_v;
};

struct GanState {
    GanConfig cfg;
    std::vector<ParamTensor> gen;
    std::vector<ParamTensor> disc;  // trunk + logit head
    std::vector<ParamTensor> proj;  // empty unless cfg.contrastive
    std::uint64_t step = 0;

    static GanState init(const GanConfig& cfg, std::uint64_t seed);
};

// Parameter tensors loaded onto a tape for one substep.
struct GanVars {
    std::vector<Var> gen;
    std::vector<Var> disc;
    std::vector<Var> proj;
};
GanVars load_params(Tape& tape, const GanState& state, bool grad_gen, bool grad_disc);

Tensor sample_latent(const GanConfig& cfg, std::size_t batch, RngStream& rng);

// z (B, latent) -> images (B,C,H,W), final activation (tanh+1)/2 into [0,1].
Var generate(Tape& tape, const GanConfig& cfg, const std::vector<Var>& gen, Var z);

// x (B,C,H,W) -> (logits (B), hidden (B, d_hidden2)).
struct DiscOut {
    Var logits;
    Var hidden;
};
DiscOut discriminate(Tape& tape, const GanConfig& cfg, const std::vector<Var>& disc, Var x);

// hidden (B, d_hidden2) -> embeddings (B, embed_dim).
Var project(Tape& tape, const GanConfig& cfg, const std::vector<Var>& proj, Var hidden);

// L_D = mean(max(0, 1 - D(real))) + mean(max(0, 1 + D(fake)))
Var hinge_d_loss(Tape& tape, Var real_logits, Var fake_logits);
// L_G = -mean(D(fake))
Var hinge_g_loss(Tape& tape, Var fake_logits);

void save_checkpoint(const GanState& state, const std::string& path);
GanState load_checkpoint(const std::string& path);

}  // namespace ganlab
