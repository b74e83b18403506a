#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganlab/rng.hpp"
#include "ganlab/tape.hpp"

namespace ganlab {

enum class AugKind {
    ZoomIn,
    ZoomOut,
    TranslationX,
    TranslationY,
    Translation,
    Brightness,
    Colorness,
    InstanceNoise,
    CutOut,
    CutMix,
    MixUp,
    SimclrCompose,
    Identity,
};

const char* kind_name(AugKind k);
AugKind kind_from_name(const std::string& name);  // throws ConfigError on unknown names
bool is_spatial_kind(AugKind k);

// Random-resized-crop + flip + color jitter recipe. Jitter defaults follow
// the CIFAR settings of the referenced contrastive-learning code.
struct SimclrSpec {
    double crop_strength = 0.3;  // lowers the crop-area bound: area >= 1 - crop_strength
    double flip_prob = 0.5;
    double brightness = 0.5;
    double contrast = 0.5;
    double saturation = 0.5;
    double hue = 0.125;

    static constexpr double kAspectLo = 3.0 / 4.0;
    static constexpr double kAspectHi = 4.0 / 3.0;
    static constexpr double kMinArea = 0.05;
};

struct AugmentSpec {
    AugKind kind = AugKind::Identity;
    double strength = 0.0;  // lambda_aug
    int channel = -1;       // Colorness: fixed RGB channel, or -1 to sample per image
    SimclrSpec simclr{};
};

// Throws ContractError when the strength is outside the kind's legal range.
void validate(const AugmentSpec& spec);

// One concrete draw of an augmentation: everything random is pinned here,
// so application is a pure deterministic function of (params, image).
struct AugParams {
    AugKind kind = AugKind::Identity;
    std::size_t batch = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::vector<double> alpha;    // per-image main scalar (alpha_h for Translation)
    std::vector<double> alpha2;   // alpha_w for Translation
    std::vector<double> off_r;    // zoom crop offsets, continuous pixels
    std::vector<double> off_c;
    std::vector<std::size_t> cut_r0, cut_c0, cut_h, cut_w;  // CutOut/CutMix rects
    std::vector<std::size_t> partner;                       // CutMix/MixUp
    std::vector<int> channel;                               // Colorness
    double variance = 0.0;                                  // InstanceNoise
    std::uint64_t noise_seed = 0;

    std::vector<double> crop_r0, crop_c0, crop_h, crop_w;  // simclr crop, continuous
    std::vector<std::uint8_t> flip;
    std::vector<double> jit_brightness, jit_contrast, jit_saturation, jit_hue;
    SimclrSpec simclr{};
};

AugParams sample_params(const AugmentSpec& spec, std::size_t batch, std::size_t height,
                        std::size_t width, RngStream& rng);

// Differentiable application on a (B,C,H,W) batch in [0,1]. Masks, grids
// and noise are constants of the draw; gradients flow to x.
Var apply_augment(const AugParams& params, Var x);

// Convenience non-gradient path for plain tensors.
Tensor apply_augment(const AugParams& params, const Tensor& x);

}  // namespace ganlab
