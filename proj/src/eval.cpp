#include "ganlab/eval.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ganlab/errors.hpp"
#include "ganlab/tape.hpp"

namespace ganlab {

namespace {

constexpr double kLeaky = 0.2;

Eigen::MatrixXd to_eigen(const Tensor& m) {
    const std::size_t d = m.shape[0];
    Eigen::MatrixXd out(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = m.v[i * d + j];
    return out;
}

Tensor from_eigen(const Eigen::MatrixXd& m) {
    const std::size_t d = static_cast<std::size_t>(m.rows());
    Tensor out = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out.v[i * d + j] = m(i, j);
    return out;
}

void check_symmetric(const Tensor& m, const char* who) {
    if (m.shape.size() != 2 || m.shape[0] != m.shape[1])
        throw ContractError(std::string(who) + ": matrix must be square, got " +
                            shape_str(m.shape));
    const std::size_t d = m.shape[0];
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::abs(m.v[i * d + j] - m.v[j * d + i]) > 1e-10)
                throw ContractError(std::string(who) + ": matrix not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
}

}  // namespace

FeatureExtractor FeatureExtractor::init(std::size_t in_dim, std::uint64_t seed,
                                        std::size_t hidden, std::size_t out_dim) {
    if (in_dim == 0 || hidden == 0 || out_dim == 0)
        throw ContractError("FeatureExtractor: zero dimension");
    RngStream rng(seed, "feat");
    FeatureExtractor fx;
    fx.in_dim = in_dim;
    fx.hidden = hidden;
    fx.out_dim = out_dim;
    fx.w0 = Tensor::zeros({in_dim, hidden});
    fx.b0 = Tensor::zeros({hidden});
    fx.w1 = Tensor::zeros({hidden, out_dim});
    fx.b1 = Tensor::zeros({out_dim});
    const double s0 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& x : fx.w0.v) x = s0 * rng.normal();
    for (double& x : fx.b0.v) x = 0.1 * rng.normal();
    for (double& x : fx.w1.v) x = s1 * rng.normal();
    for (double& x : fx.b1.v) x = 0.1 * rng.normal();
    return fx;
}

Tensor extract_features(const FeatureExtractor& fx, const Tensor& x) {
    if (x.shape.size() != 4)
        throw ContractError("extract_features: expected (B,C,H,W), got " + shape_str(x.shape));
    const std::size_t B = x.shape[0];
    const std::size_t flat = x.shape[1] * x.shape[2] * x.shape[3];
    if (flat != fx.in_dim)
        throw ContractError("extract_features: image size " + std::to_string(flat) +
                            " does not match extractor input " + std::to_string(fx.in_dim));
    Tensor h = Tensor::zeros({B, fx.hidden});
    mm(x.v.data(), fx.w0.v.data(), h.v.data(), B, fx.in_dim, fx.hidden);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < fx.hidden; ++j) {
            double& v = h.v[i * fx.hidden + j];
            v += fx.b0.v[j];
            if (v < 0.0) v *= kLeaky;
        }
    Tensor out = Tensor::zeros({B, fx.out_dim});
    mm(h.v.data(), fx.w1.v.data(), out.v.data(), B, fx.hidden, fx.out_dim);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < fx.out_dim; ++j) out.v[i * fx.out_dim + j] += fx.b1.v[j];
    return out;
}

FrechetStats compute_stats(const Tensor& features, double ridge) {
    if (features.shape.size() != 2 || features.shape[0] < 2)
        throw ContractError("compute_stats: need a (n,d) batch with n >= 2, got " +
                            shape_str(features.shape));
    const std::size_t n = features.shape[0], d = features.shape[1];
    FrechetStats st;
    st.count = n;
    st.mu.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) st.mu[j] += features.v[i * d + j];
    for (double& m : st.mu) m /= static_cast<double>(n);
    st.sigma = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double cj = features.v[i * d + j] - st.mu[j];
            for (std::size_t k = j; k < d; ++k)
                st.sigma.v[j * d + k] += cj * (features.v[i * d + k] - st.mu[k]);
        }
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            st.sigma.v[j * d + k] /= static_cast<double>(n - 1);
            st.sigma.v[k * d + j] = st.sigma.v[j * d + k];
        }
    for (std::size_t j = 0; j < d; ++j) st.sigma.v[j * d + j] += ridge;
    return st;
}

Tensor matrix_sqrt_psd(const Tensor& m) {
    check_symmetric(m, "matrix_sqrt_psd");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    if (es.info() != Eigen::Success)
        throw NumericalError("matrix_sqrt_psd: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-8)
            throw ContractError("matrix_sqrt_psd: eigenvalue " + std::to_string(ev(i)) +
                                " too negative for a PSD matrix");
        ev(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
    }
    const Eigen::MatrixXd s =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return from_eigen(0.5 * (s + s.transpose()));
}

double frechet_distance(const FrechetStats& a, const FrechetStats& b) {
    const std::size_t d = a.mu.size();
    if (b.mu.size() != d || a.sigma.shape[0] != d || b.sigma.shape[0] != d)
        throw ContractError("frechet_distance: dimension mismatch");
    double dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double dm = a.mu[i] - b.mu[i];
        dist += dm * dm;
    }
    for (std::size_t i = 0; i < d; ++i)
        dist += a.sigma.v[i * d + i] + b.sigma.v[i * d + i];

    const Tensor sa = matrix_sqrt_psd(a.sigma);
    const Eigen::MatrixXd ea = to_eigen(sa), eb = to_eigen(b.sigma);
    Eigen::MatrixXd inner = ea * eb * ea;
    inner = 0.5 * (inner + inner.transpose().eval());
    const Tensor s = matrix_sqrt_psd(from_eigen(inner));
    for (std::size_t i = 0; i < d; ++i) dist -= 2.0 * s.v[i * d + i];

    return dist < 0.0 ? 0.0 : dist;
}

double proxy_fid(const FeatureExtractor& fx, const Tensor& real, const Tensor& fake) {
    for (const Tensor* t : {&real, &fake})
        if (t->shape.size() != 4 || t->shape[0] < fx.out_dim + 1)
            throw ContractError("proxy_fid: each image set needs at least " +
                                std::to_string(fx.out_dim + 1) + " samples, got " +
                                shape_str(t->shape));
    const FrechetStats a = compute_stats(extract_features(fx, real), kCovRidge);
    const FrechetStats b = compute_stats(extract_features(fx, fake), kCovRidge);
    return frechet_distance(a, b);
}

double fid_ratio(const FeatureExtractor& fx, const AugmentSpec& spec, const Tensor& real,
                 const Tensor& fake, RngStream& rng) {
    const double denom = proxy_fid(fx, real, fake);
    if (denom == 0.0) throw ContractError("fid_ratio: clean proxy-FID is zero");
    const AugParams pr = sample_params(spec, real.shape[0], real.shape[2], real.shape[3], rng);
    const AugParams pf = sample_params(spec, fake.shape[0], fake.shape[2], fake.shape[3], rng);
    return proxy_fid(fx, apply_augment(pr, real), apply_augment(pf, fake)) / denom;
}

}  // namespace ganlab
