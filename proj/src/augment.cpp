#include "ganlab/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ganlab/errors.hpp"

namespace ganlab {

namespace {

constexpr const char* kKindNames[] = {
    "ZoomIn",        "ZoomOut", "TranslationX", "TranslationY",  "Translation",
    "Brightness",    "Colorness", "InstanceNoise", "CutOut",     "CutMix",
    "MixUp",         "SimclrCompose", "Identity",
};

std::size_t round_to_pixels(double frac, std::size_t extent) {
    const double px = std::round(frac * static_cast<double>(extent));
    return static_cast<std::size_t>(std::min(px, static_cast<double>(extent)));
}

// RGB <-> YIQ, used for hue rotation about the gray axis.
constexpr double kRgbToYiq[9] = {0.299,    0.587,     0.114,     0.595716, -0.274453,
                                 -0.321263, 0.211456, -0.522591, 0.311135};
constexpr double kYiqToRgb[9] = {1.0, 0.9563, 0.6210, 1.0, -0.2721, -0.6474, 1.0, -1.1070, 1.7046};

void hue_matrix(double turns, double* m) {
    const double theta = turns * 6.283185307179586476925286766559;
    const double c = std::cos(theta), s = std::sin(theta);
    const double rot[9] = {1, 0, 0, 0, c, -s, 0, s, c};
    double tmp[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += rot[i * 3 + k] * kRgbToYiq[k * 3 + j];
            tmp[i * 3 + j] = acc;
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += kYiqToRgb[i * 3 + k] * tmp[k * 3 + j];
            m[i * 3 + j] = acc;
        }
}

struct GridBuilder {
    Tensor grid;
    std::size_t H, W;
    GridBuilder(std::size_t b, std::size_t h, std::size_t w)
        : grid(Tensor::zeros({b, h, w, 2})), H(h), W(w) {}
    void set(std::size_t b, std::size_t i, std::size_t j, double r, double c) {
        const std::size_t s = (b * H + i) * W + j;
        grid.v[2 * s] = r;
        grid.v[2 * s + 1] = c;
    }
};

// Constant (B,1,1,1) tensor from a per-image vector.
Tensor per_image(const std::vector<double>& xs) {
    return Tensor({xs.size(), 1, 1, 1}, xs);
}

Var apply_spatial(const AugParams& p, Var x) {
    Tape& t = *x.tape;
    const Shape s = t.value(x).shape;
    const std::size_t B = s[0], H = s[2], W = s[3];
    const double Hm1 = static_cast<double>(H - 1), Wm1 = static_cast<double>(W - 1);
    GridBuilder g(B, H, W);
    for (std::size_t b = 0; b < B; ++b) {
        switch (p.kind) {
            case AugKind::ZoomIn: {
                const double ch = (1.0 - p.alpha[b]) * static_cast<double>(H);
                const double cw = (1.0 - p.alpha[b]) * static_cast<double>(W);
                const double sr = H > 1 ? (ch - 1.0) / Hm1 : 0.0;
                const double sc = W > 1 ? (cw - 1.0) / Wm1 : 0.0;
                for (std::size_t i = 0; i < H; ++i)
                    for (std::size_t j = 0; j < W; ++j)
                        g.set(b, i, j, p.off_r[b] + sr * static_cast<double>(i),
                              p.off_c[b] + sc * static_cast<double>(j));
                break;
            }
            case AugKind::ZoomOut: {
                const double padr = p.alpha[b] * static_cast<double>(H);
                const double padc = p.alpha[b] * static_cast<double>(W);
                const double ch = (1.0 + p.alpha[b]) * static_cast<double>(H);
                const double cw = (1.0 + p.alpha[b]) * static_cast<double>(W);
                const double sr = H > 1 ? (ch - 1.0) / Hm1 : 0.0;
                const double sc = W > 1 ? (cw - 1.0) / Wm1 : 0.0;
                for (std::size_t i = 0; i < H; ++i)
                    for (std::size_t j = 0; j < W; ++j)
                        g.set(b, i, j, p.off_r[b] + sr * static_cast<double>(i) - padr,
                              p.off_c[b] + sc * static_cast<double>(j) - padc);
                break;
            }
            case AugKind::TranslationX:
            case AugKind::TranslationY:
            case AugKind::Translation: {
                double sv = 0.0, sh = 0.0;
                if (p.kind == AugKind::TranslationX) sh = p.alpha[b] * static_cast<double>(W);
                else if (p.kind == AugKind::TranslationY) sv = p.alpha[b] * static_cast<double>(H);
                else {
                    sv = p.alpha[b] * static_cast<double>(H);
                    sh = p.alpha2[b] * static_cast<double>(W);
                }
                for (std::size_t i = 0; i < H; ++i)
                    for (std::size_t j = 0; j < W; ++j)
                        g.set(b, i, j, static_cast<double>(i) - sv, static_cast<double>(j) - sh);
                break;
            }
            default: throw ContractError("apply_spatial: not a spatial kind");
        }
    }
    return t.bilinear_sample(x, std::move(g.grid));
}

Var apply_simclr(const AugParams& p, Var x) {
    Tape& t = *x.tape;
    const Shape s = t.value(x).shape;
    const std::size_t B = s[0], C = s[1], H = s[2], W = s[3];
    const double Hm1 = static_cast<double>(H - 1), Wm1 = static_cast<double>(W - 1);

    // crop + resize + optional horizontal flip, all through one grid
    GridBuilder g(B, H, W);
    for (std::size_t b = 0; b < B; ++b) {
        const double sr = H > 1 ? (p.crop_h[b] - 1.0) / Hm1 : 0.0;
        const double sc = W > 1 ? (p.crop_w[b] - 1.0) / Wm1 : 0.0;
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const std::size_t jj = p.flip[b] ? (W - 1 - j) : j;
                g.set(b, i, j, p.crop_r0[b] + sr * static_cast<double>(i),
                      p.crop_c0[b] + sc * static_cast<double>(jj));
            }
    }
    Var out = t.bilinear_sample(x, std::move(g.grid));

    const bool any_b = p.simclr.brightness > 0.0;
    const bool any_c = p.simclr.contrast > 0.0;
    const bool any_s = p.simclr.saturation > 0.0;
    const bool any_h = p.simclr.hue > 0.0;
    if (any_b) {
        out = t.clip01(t.mul(out, t.constant(per_image(p.jit_brightness))));
    }
    Tensor luma = Tensor::zeros({C, C});
    if ((any_c || any_s) && C == 3) {
        const double w[3] = {0.299, 0.587, 0.114};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) luma.v[i * 3 + j] = w[j];
    } else if (any_c || any_s) {
        // grayscale already; luma map is identity averaged over channels
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = 0; j < C; ++j) luma.v[i * C + j] = 1.0 / static_cast<double>(C);
    }
    if (any_c) {
        Var m = t.reduce_image_mean(t.channel_mix(out, luma));
        std::vector<double> f = p.jit_contrast, omf(B);
        for (std::size_t b = 0; b < B; ++b) omf[b] = 1.0 - f[b];
        out = t.clip01(t.add(t.mul(out, t.constant(per_image(f))),
                             t.mul(m, t.constant(per_image(omf)))));
    }
    if (any_s) {
        Var gray = t.channel_mix(out, luma);
        std::vector<double> f = p.jit_saturation, omf(B);
        for (std::size_t b = 0; b < B; ++b) omf[b] = 1.0 - f[b];
        out = t.clip01(t.add(t.mul(out, t.constant(per_image(f))),
                             t.mul(gray, t.constant(per_image(omf)))));
    }
    if (any_h && C == 3) {
        Tensor mats = Tensor::zeros({B, 3, 3});
        for (std::size_t b = 0; b < B; ++b) hue_matrix(p.jit_hue[b], mats.v.data() + b * 9);
        out = t.clip01(t.channel_mix(out, std::move(mats)));
    }
    return out;
}

}  // namespace

const char* kind_name(AugKind k) { return kKindNames[static_cast<int>(k)]; }

AugKind kind_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(AugKind::Identity); ++i)
        if (name == kKindNames[i]) return static_cast<AugKind>(i);
    throw ConfigError("unknown augmentation kind '" + name + "'");
}

bool is_spatial_kind(AugKind k) {
    switch (k) {
        case AugKind::ZoomIn:
        case AugKind::ZoomOut:
        case AugKind::TranslationX:
        case AugKind::TranslationY:
        case AugKind::Translation: return true;
        default: return false;
    }
}

void validate(const AugmentSpec& spec) {
    const double l = spec.strength;
    if (!std::isfinite(l) || l < 0.0)
        throw ContractError(std::string("AugmentSpec: strength must be finite and >= 0 for ") +
                            kind_name(spec.kind));
    switch (spec.kind) {
        case AugKind::ZoomIn:
        case AugKind::ZoomOut:
        case AugKind::TranslationX:
        case AugKind::TranslationY:
        case AugKind::Translation:
            if (l > 0.5)
                throw ContractError(std::string("AugmentSpec: spatial strength must be <= 0.5, got ") +
                                    std::to_string(l));
            break;
        case AugKind::Brightness:
        case AugKind::Colorness:
        case AugKind::CutOut:
        case AugKind::CutMix:
        case AugKind::SimclrCompose:
            if (l > 1.0)
                throw ContractError(std::string("AugmentSpec: strength must be <= 1 for ") +
                                    kind_name(spec.kind));
            break;
        case AugKind::InstanceNoise:
        case AugKind::MixUp:
        case AugKind::Identity: break;
    }
    if (spec.kind == AugKind::Colorness && (spec.channel < -1 || spec.channel > 2))
        throw ContractError("AugmentSpec: Colorness channel must be in {-1,0,1,2}");
}

AugParams sample_params(const AugmentSpec& spec, std::size_t batch, std::size_t height,
                        std::size_t width, RngStream& rng) {
    validate(spec);
    if ((spec.kind == AugKind::CutMix || spec.kind == AugKind::MixUp) && batch < 2)
        throw ContractError(std::string(kind_name(spec.kind)) + " requires batch size >= 2");
    AugParams p;
    p.kind = spec.kind;
    p.batch = batch;
    p.height = height;
    p.width = width;
    const double l = spec.strength;
    switch (spec.kind) {
        case AugKind::Identity: break;
        case AugKind::ZoomIn:
            for (std::size_t b = 0; b < batch; ++b) {
                const double a = rng.uniform(0.0, l);
                p.alpha.push_back(a);
                p.off_r.push_back(rng.uniform(0.0, a * static_cast<double>(height)));
                p.off_c.push_back(rng.uniform(0.0, a * static_cast<double>(width)));
            }
            break;
        case AugKind::ZoomOut:
            for (std::size_t b = 0; b < batch; ++b) {
                const double a = rng.uniform(0.0, l);
                p.alpha.push_back(a);
                p.off_r.push_back(rng.uniform(0.0, a * static_cast<double>(height)));
                p.off_c.push_back(rng.uniform(0.0, a * static_cast<double>(width)));
            }
            break;
        case AugKind::TranslationX:
        case AugKind::TranslationY:
            for (std::size_t b = 0; b < batch; ++b) p.alpha.push_back(rng.uniform(-l, l));
            break;
        case AugKind::Translation:
            for (std::size_t b = 0; b < batch; ++b) {
                p.alpha.push_back(rng.uniform(-l, l));
                p.alpha2.push_back(rng.uniform(-l, l));
            }
            break;
        case AugKind::Brightness:
            for (std::size_t b = 0; b < batch; ++b) p.alpha.push_back(rng.uniform(-l, l));
            break;
        case AugKind::Colorness:
            for (std::size_t b = 0; b < batch; ++b) {
                p.alpha.push_back(rng.uniform(-l, l));
                p.channel.push_back(spec.channel >= 0 ? spec.channel
                                                      : static_cast<int>(rng.uniform_int(3)));
            }
            break;
        case AugKind::InstanceNoise:
            p.variance = l;
            p.noise_seed = rng.next_u64();
            break;
        case AugKind::CutOut:
        case AugKind::CutMix: {
            for (std::size_t b = 0; b < batch; ++b) {
                const double a = rng.uniform(0.0, l);
                p.alpha.push_back(a);
                const std::size_t h = round_to_pixels(a, height);
                const std::size_t w = round_to_pixels(a, width);
                p.cut_h.push_back(h);
                p.cut_w.push_back(w);
                p.cut_r0.push_back(h < height ? rng.uniform_int(height - h + 1) : 0);
                p.cut_c0.push_back(w < width ? rng.uniform_int(width - w + 1) : 0);
            }
            if (spec.kind == AugKind::CutMix) {
                p.partner.resize(batch);
                for (std::size_t b = 0; b < batch; ++b) p.partner[b] = b;
                rng.shuffle(p.partner);
            }
            break;
        }
        case AugKind::MixUp: {
            for (std::size_t b = 0; b < batch; ++b) {
                const double a = l > 0.0 ? rng.beta(l, l) : 1.0;
                p.alpha.push_back(std::max(a, 1.0 - a));
            }
            p.partner.resize(batch);
            for (std::size_t b = 0; b < batch; ++b) p.partner[b] = b;
            rng.shuffle(p.partner);
            break;
        }
        case AugKind::SimclrCompose: {
            p.simclr = spec.simclr;
            p.simclr.crop_strength = l;
            const double lo =
                std::max(SimclrSpec::kMinArea, std::min(1.0, 1.0 - p.simclr.crop_strength));
            const double Hd = static_cast<double>(height), Wd = static_cast<double>(width);
            for (std::size_t b = 0; b < batch; ++b) {
                double ch = Hd, cw = Wd, r0 = 0.0, c0 = 0.0;
                for (int attempt = 0; attempt < 10; ++attempt) {
                    const double area = rng.uniform(lo, 1.0) * Hd * Wd;
                    const double ar = std::exp(rng.uniform(std::log(SimclrSpec::kAspectLo),
                                                           std::log(SimclrSpec::kAspectHi)));
                    const double w = std::sqrt(area * ar);
                    const double h = std::sqrt(area / ar);
                    if (h <= Hd && w <= Wd && h >= 1.0 && w >= 1.0) {
                        ch = h;
                        cw = w;
                        r0 = rng.uniform(0.0, Hd - h);
                        c0 = rng.uniform(0.0, Wd - w);
                        break;
                    }
                }
                p.crop_h.push_back(ch);
                p.crop_w.push_back(cw);
                p.crop_r0.push_back(r0);
                p.crop_c0.push_back(c0);
                p.flip.push_back(rng.uniform() < p.simclr.flip_prob ? 1 : 0);
                const double sb = p.simclr.brightness, sc = p.simclr.contrast;
                const double ss = p.simclr.saturation, sh = p.simclr.hue;
                p.jit_brightness.push_back(sb > 0.0 ? rng.uniform(std::max(0.0, 1.0 - sb), 1.0 + sb)
                                                    : 1.0);
                p.jit_contrast.push_back(sc > 0.0 ? rng.uniform(std::max(0.0, 1.0 - sc), 1.0 + sc)
                                                  : 1.0);
                p.jit_saturation.push_back(ss > 0.0 ? rng.uniform(std::max(0.0, 1.0 - ss), 1.0 + ss)
                                                    : 1.0);
                p.jit_hue.push_back(sh > 0.0 ? rng.uniform(-sh, sh) : 0.0);
            }
            break;
        }
    }
    return p;
}

Var apply_augment(const AugParams& p, Var x) {
    Tape& t = *x.tape;
    const Shape s = t.value(x).shape;
    if (s.size() != 4)
        throw ShapeError("apply_augment: image batch must be rank-4, got " + shape_str(s));
    const std::size_t B = s[0], C = s[1], H = s[2], W = s[3];
    if (p.kind != AugKind::Identity && (p.batch != B || p.height != H || p.width != W))
        throw ContractError("apply_augment: params were sampled for a different batch shape");

    switch (p.kind) {
        case AugKind::Identity: return x;
        case AugKind::ZoomIn:
        case AugKind::ZoomOut:
        case AugKind::TranslationX:
        case AugKind::TranslationY:
        case AugKind::Translation: return apply_spatial(p, x);
        case AugKind::Brightness: return t.clip01(t.add(x, t.constant(per_image(p.alpha))));
        case AugKind::Colorness: {
            Tensor delta = Tensor::zeros(s);
            for (std::size_t b = 0; b < B; ++b) {
                const auto ch = static_cast<std::size_t>(p.channel[b]);
                if (ch >= C) throw ContractError("Colorness: channel index out of range");
                double* dst = delta.v.data() + (b * C + ch) * H * W;
                for (std::size_t k = 0; k < H * W; ++k) dst[k] = p.alpha[b];
            }
            return t.clip01(t.add(x, t.constant(std::move(delta))));
        }
        case AugKind::InstanceNoise: {
            if (p.variance == 0.0) return x;
            RngStream noise_rng(p.noise_seed);
            Tensor noise = Tensor::zeros(s);
            const double sigma = std::sqrt(p.variance);
            for (double& v : noise.v) v = sigma * noise_rng.normal();
            return t.add(x, t.constant(std::move(noise)));
        }
        case AugKind::CutOut: {
            Tensor mask = Tensor::full(s, 1.0);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t i = 0; i < p.cut_h[b]; ++i)
                        for (std::size_t j = 0; j < p.cut_w[b]; ++j)
                            mask.v[((b * C + c) * H + p.cut_r0[b] + i) * W + p.cut_c0[b] + j] = 0.0;
            return t.mul(x, t.constant(std::move(mask)));
        }
        case AugKind::CutMix: {
            Tensor mask = Tensor::zeros(s);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t i = 0; i < p.cut_h[b]; ++i)
                        for (std::size_t j = 0; j < p.cut_w[b]; ++j)
                            mask.v[((b * C + c) * H + p.cut_r0[b] + i) * W + p.cut_c0[b] + j] = 1.0;
            Tensor inv = Tensor::full(s, 1.0);
            for (std::size_t i = 0; i < inv.size(); ++i) inv.v[i] -= mask.v[i];
            Var patch = t.mul(t.permute_batch(x, p.partner), t.constant(std::move(mask)));
            return t.add(t.mul(x, t.constant(std::move(inv))), patch);
        }
        case AugKind::MixUp: {
            std::vector<double> oma(B);
            for (std::size_t b = 0; b < B; ++b) oma[b] = 1.0 - p.alpha[b];
            Var own = t.mul(x, t.constant(per_image(p.alpha)));
            Var other = t.mul(t.permute_batch(x, p.partner), t.constant(per_image(oma)));
            return t.add(own, other);
        }
        case AugKind::SimclrCompose: return apply_simclr(p, x);
    }
    throw ContractError("apply_augment: unhandled kind");
}

Tensor apply_augment(const AugParams& p, const Tensor& x) {
    Tape t;
    Var xv = t.constant(x);
    return t.value(apply_augment(p, xv));
}

}  // namespace ganlab
