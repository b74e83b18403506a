#include "ganlab/trainer.hpp"

#include <cmath>

#include "ganlab/errors.hpp"

namespace ganlab {

namespace {

using Chain = std::vector<AugParams>;

Chain sample_chain(const std::vector<AugmentSpec>& specs, const std::vector<double>& strengths,
                   std::size_t batch, std::size_t h, std::size_t w, RngStream& rng) {
    Chain c;
    c.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        AugmentSpec s = specs[i];
        s.strength = strengths[i];
        c.push_back(sample_params(s, batch, h, w, rng));
    }
    return c;
}

Tensor apply_chain(const Chain& c, Tensor x) {
    for (const AugParams& p : c) x = apply_augment(p, x);
    return x;
}

Var apply_chain(const Chain& c, Var x) {
    for (const AugParams& p : c) x = apply_augment(p, x);
    return x;
}

void check_finite_loss(const char* what, double v, std::size_t step) {
    if (!std::isfinite(v))
        throw NumericalError(std::string(what) + " non-finite at step " + std::to_string(step));
}

void update_group(Tape& t, std::vector<ParamTensor>& params, const std::vector<Var>& leaves,
                  std::size_t adam_step, double lr, const AdamConfig& cfg) {
    for (std::size_t i = 0; i < params.size(); ++i)
        adam_update(params[i], t.grad(leaves[i]), adam_step, lr, cfg);
}

}  // namespace

const char* mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::Baseline: return "baseline";
        case TrainMode::AugRealOnly: return "aug_real_only";
        case TrainMode::AugRealFake: return "aug_real_fake";
        case TrainMode::Bcr: return "bcr";
        case TrainMode::Cntr: return "cntr";
        case TrainMode::CntrBcr: return "cntr_bcr";
    }
    throw ContractError("mode_name: unknown mode");
}

TrainMode mode_from_name(const std::string& name) {
    for (TrainMode m : {TrainMode::Baseline, TrainMode::AugRealOnly, TrainMode::AugRealFake,
                        TrainMode::Bcr, TrainMode::Cntr, TrainMode::CntrBcr})
        if (name == mode_name(m)) return m;
    throw ConfigError("unknown training mode '" + name + "'");
}

bool mode_uses_bcr(TrainMode m) { return m == TrainMode::Bcr || m == TrainMode::CntrBcr; }
bool mode_uses_cntr(TrainMode m) { return m == TrainMode::Cntr || m == TrainMode::CntrBcr; }

void TrainConfig::validate() const {
    if (total_steps == 0) throw ContractError("TrainConfig: total_steps must be positive");
    if (batch == 0) throw ContractError("TrainConfig: batch must be positive");
    if (disc_steps == 0) throw ContractError("TrainConfig: disc_steps must be positive");
    if (chain.size() > 2) throw ContractError("TrainConfig: augmentation chain longer than 2");
    for (const AugmentSpec& s : chain) {
        ganlab::validate(s);
        if ((s.kind == AugKind::CutMix || s.kind == AugKind::MixUp) && batch < 2)
            throw ContractError("TrainConfig: CutMix/MixUp need batch >= 2");
    }
    if (mode_uses_cntr(mode) && !gan.contrastive)
        throw ContractError("TrainConfig: cntr modes require gan.contrastive");
}

void adam_update(ParamTensor& p, const Tensor& grad, std::size_t step, double lr,
                 const AdamConfig& cfg) {
    if (grad.shape != p.value.shape)
        throw ShapeError("adam_update: gradient shape " + shape_str(grad.shape) +
                         " does not match parameter " + shape_str(p.value.shape));
    if (step == 0) throw ContractError("adam_update: step is 1-based");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < p.value.v.size(); ++i) {
        double& m = p.adam_m.v[i];
        double& v = p.adam_v.v[i];
        const double g = grad.v[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        p.value.v[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
    }
    if (!p.value.all_finite())
        throw NumericalError("adam_update: parameter '" + p.name + "' became non-finite");
}

double anneal_strength(double lambda0, std::size_t step, std::size_t total) {
    if (total == 0) throw ContractError("anneal_strength: total must be positive");
    if (step > total) throw ContractError("anneal_strength: step beyond schedule end");
    return lambda0 * static_cast<double>(total - step) / static_cast<double>(total);
}

StepMetrics train_step(GanState& state, const TrainConfig& cfg, const Tensor& real,
                       TrainStreams& streams) {
    const std::size_t H = cfg.gan.height, W = cfg.gan.width;
    const std::size_t B = real.shape[0];
    const TrainMode mode = cfg.mode;

    StepMetrics m;
    m.step = state.step;
    m.has_bcr = mode_uses_bcr(mode);
    m.has_cntr = mode_uses_cntr(mode);

    // effective per-link strengths; the schedule hits 0 on the last step
    std::vector<double> strengths;
    for (const AugmentSpec& s : cfg.chain) strengths.push_back(s.strength);
    if (cfg.anneal && cfg.total_steps > 1)
        for (double& s : strengths)
            s = anneal_strength(s, state.step, cfg.total_steps - 1);
    else if (cfg.anneal)
        for (double& s : strengths) s = 0.0;
    m.strengths = strengths;

    auto draw = [&](RngStream& rng) {
        return sample_chain(cfg.chain, strengths, B, H, W, rng);
    };

    // ---- discriminator update ------------------------------------------
    for (std::size_t k = 0; k < cfg.disc_steps; ++k) {
        Tape t;
        GanVars v = load_params(t, state, /*grad_gen=*/false, /*grad_disc=*/true);
        Var fake = generate(t, cfg.gan, v.gen,
                            t.constant(sample_latent(cfg.gan, B, streams.latent)));

        Var d_real{}, d_fake{};
        if (mode == TrainMode::AugRealOnly || mode == TrainMode::AugRealFake) {
            // reals carry no parameters; augment them outside the graph
            d_real = discriminate(t, cfg.gan, v.disc,
                                  t.constant(apply_chain(draw(streams.aug), real))).logits;
        } else {
            d_real = discriminate(t, cfg.gan, v.disc, t.constant(real)).logits;
        }
        if (mode == TrainMode::AugRealFake) {
            d_fake = discriminate(t, cfg.gan, v.disc,
                                  apply_chain(draw(streams.aug), fake)).logits;
        } else {
            d_fake = discriminate(t, cfg.gan, v.disc, fake).logits;
        }
        Var loss = hinge_d_loss(t, d_real, d_fake);
        m.l_d = t.value(loss).v[0];

        if (m.has_bcr) {
            Var aug_r = discriminate(t, cfg.gan, v.disc,
                                     t.constant(apply_chain(draw(streams.aug), real))).logits;
            Var aug_f = discriminate(t, cfg.gan, v.disc,
                                     apply_chain(draw(streams.aug), fake)).logits;
            Var l_bcr = bcr_from_logits(t, d_real, aug_r, d_fake, aug_f);
            m.l_bcr = t.value(l_bcr).v[0];
            loss = t.add(loss, t.scalar_mul(l_bcr, cfg.bcr.lambda));
        }
        if (m.has_cntr) {
            auto embed = [&](Var x, const Chain& c) {
                Var hidden = discriminate(t, cfg.gan, v.disc, apply_chain(c, x)).hidden;
                return project(t, cfg.gan, v.proj, hidden);
            };
            Var xr = t.constant(real);
            Var er = t.concat({embed(xr, draw(streams.aug)), embed(xr, draw(streams.aug))});
            Var ef = t.concat({embed(fake, draw(streams.aug)), embed(fake, draw(streams.aug))});
            Var l_cntr = t.add(cntr_loss(t, er, cfg.cntr.tau), cntr_loss(t, ef, cfg.cntr.tau));
            m.l_cntr = t.value(l_cntr).v[0];
            loss = t.add(loss, t.scalar_mul(l_cntr, cfg.cntr.lambda));
        }
        check_finite_loss("discriminator loss", t.value(loss).v[0], state.step);
        t.backward(loss);
        const std::size_t adam_step = state.step * cfg.disc_steps + k + 1;
        update_group(t, state.disc, v.disc, adam_step, cfg.adam.lr_d, cfg.adam);
        update_group(t, state.proj, v.proj, adam_step, cfg.adam.lr_d, cfg.adam);
    }

    // ---- generator update ----------------------------------------------
    {
        Tape t;
        GanVars v = load_params(t, state, /*grad_gen=*/true, /*grad_disc=*/false);
        Var fake = generate(t, cfg.gan, v.gen,
                            t.constant(sample_latent(cfg.gan, B, streams.latent)));
        // only the real+fake augmentation lineage feeds augmented fakes to D
        // on the generator step; the gradient flows through the augmentation
        if (mode == TrainMode::AugRealFake) fake = apply_chain(draw(streams.aug), fake);
        Var loss = hinge_g_loss(t, discriminate(t, cfg.gan, v.disc, fake).logits);
        m.l_g = t.value(loss).v[0];
        check_finite_loss("generator loss", m.l_g, state.step);
        t.backward(loss);
        update_group(t, state.gen, v.gen, state.step + 1, cfg.adam.lr_g, cfg.adam);
    }

    ++state.step;
    return m;
}

RunRecord run(const TrainConfig& cfg, const Dataset& data, const FeatureExtractor* fx,
              const EvalHook& on_eval) {
    cfg.validate();
    if (data.size() == 0) throw ContractError("run: empty dataset");
    if (data.channels != cfg.gan.channels || data.height != cfg.gan.height ||
        data.width != cfg.gan.width)
        throw ContractError("run: dataset dims do not match the model config");

    RunRecord rec;
    rec.state = GanState::init(cfg.gan, cfg.seed);
    TrainStreams streams(cfg.seed);
    BatchSampler sampler(data, cfg.batch, streams.data);

    Tensor eval_real;
    std::size_t n_eval = 0;
    if (fx) {
        n_eval = std::min<std::size_t>(cfg.eval_samples, data.size());
        std::vector<std::size_t> idx(n_eval);
        for (std::size_t i = 0; i < n_eval; ++i) idx[i] = i;
        eval_real = data.gather(idx);
    }
    RngStream eval_latents(cfg.seed, "eval");
    auto evaluate = [&]() {
        Tape t;
        GanVars v = load_params(t, rec.state, false, false);
        Var img = generate(t, cfg.gan, v.gen,
                           t.constant(sample_latent(cfg.gan, n_eval, eval_latents)));
        return proxy_fid(*fx, eval_real, t.value(img));
    };

    rec.steps.reserve(cfg.total_steps);
    for (std::size_t s = 0; s < cfg.total_steps; ++s) {
        rec.steps.push_back(train_step(rec.state, cfg, sampler.next(), streams));
        const bool last = s + 1 == cfg.total_steps;
        if (fx && (last || (cfg.eval_interval && (s + 1) % cfg.eval_interval == 0))) {
            const double fid = evaluate();
            rec.evals.push_back({s + 1, fid});
            if (last) rec.final_proxy_fid = fid;
            if (on_eval) on_eval(rec.state, s + 1, fid);
        }
    }
    return rec;
}

}  // namespace ganlab
