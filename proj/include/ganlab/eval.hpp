#pragma once

#include <cstdint>
#include <vector>

#include "ganlab/augment.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

// Frozen random two-layer feature map over flattened pixels. Stands in for a
// pretrained embedding network; scores are comparable only to each other,
// hence "proxy-FID" throughout.
struct FeatureExtractor {
    std::size_t in_dim = 0, hidden = 0, out_dim = 0;
    Tensor w0, b0, w1, b1;

    static FeatureExtractor init(std::size_t in_dim, std::uint64_t seed, std::size_t hidden = 128,
                                 std::size_t out_dim = 64);
};

// (B,C,H,W) in [0,1] -> (B, out_dim). Deterministic, no autodiff involved.
Tensor extract_features(const FeatureExtractor& fx, const Tensor& x);

struct FrechetStats {
    std::vector<double> mu;
    Tensor sigma;  // (d,d), symmetric
    std::size_t count = 0;
};

// Gaussian moments of a feature batch (rows). Unbiased covariance plus an
// optional ridge on the diagonal.
FrechetStats compute_stats(const Tensor& features, double ridge = 0.0);

// Symmetric PSD square root via eigendecomposition; eigenvalues clamped at 0.
Tensor matrix_sqrt_psd(const Tensor& m);

// d^2 = |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}), computed on the
// symmetrized product. Small negative results are clamped to 0.
double frechet_distance(const FrechetStats& a, const FrechetStats& b);

constexpr double kCovRidge = 1e-6;

// Fréchet distance between feature moments of two image sets, ridge applied
// to both covariances. Each set needs at least out_dim+1 samples.
double proxy_fid(const FeatureExtractor& fx, const Tensor& real, const Tensor& fake);

// FID(t(real), t(fake)) / FID(real, fake) with independent parameter draws
// per image on each side.
double fid_ratio(const FeatureExtractor& fx, const AugmentSpec& spec, const Tensor& real,
                 const Tensor& fake, RngStream& rng);

}  // namespace ganlab
