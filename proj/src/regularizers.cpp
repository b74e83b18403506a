#include "ganlab/regularizers.hpp"

#include "ganlab/errors.hpp"

namespace ganlab {

Var bcr_from_logits(Tape& t, Var clean_real, Var aug_real, Var clean_fake, Var aug_fake) {
    Var dr = t.sub(clean_real, aug_real);
    Var df = t.sub(clean_fake, aug_fake);
    return t.add(t.mean(t.mul(dr, dr)), t.mean(t.mul(df, df)));
}

Var bcr_loss(Tape& t, const GanConfig& cfg, const std::vector<Var>& disc, Var x_real, Var x_fake,
             const AugParams& t1, const AugParams& t2) {
    Var clean_real = discriminate(t, cfg, disc, x_real).logits;
    Var aug_real = discriminate(t, cfg, disc, apply_augment(t1, x_real)).logits;
    Var clean_fake = discriminate(t, cfg, disc, x_fake).logits;
    Var aug_fake = discriminate(t, cfg, disc, apply_augment(t2, x_fake)).logits;
    return bcr_from_logits(t, clean_real, aug_real, clean_fake, aug_fake);
}

Var cntr_loss(Tape& t, Var embeddings, double tau) {
    if (tau <= 0.0) throw ContractError("cntr_loss: temperature must be positive");
    const Shape s = t.value(embeddings).shape;
    if (s.size() != 2 || s[0] < 2 || s[0] % 2 != 0)
        throw ContractError("cntr_loss: embeddings must be (2N,d) with N >= 1, got " +
                            shape_str(s));
    const std::size_t rows = s[0], half = rows / 2;

    Var y = t.l2_normalize(embeddings);
    Var sim = t.matmul(y, y, /*trans_b=*/true);
    Var z = t.scalar_mul(sim, 1.0 / tau);
    Var e = t.exp_op(z);

    Tensor offdiag = Tensor::full({rows, rows}, 1.0);
    for (std::size_t i = 0; i < rows; ++i) offdiag.v[i * rows + i] = 0.0;
    Tensor pos_mask = Tensor::zeros({rows, rows});
    for (std::size_t i = 0; i < rows; ++i) pos_mask.v[i * rows + (i + half) % rows] = 1.0;
    Tensor ones = Tensor::full({rows, 1}, 1.0);

    Var denom = t.matmul(t.mul(e, t.constant(std::move(offdiag))), t.constant(ones));
    Var pos = t.matmul(t.mul(z, t.constant(std::move(pos_mask))), t.constant(ones));
    return t.mean(t.sub(t.log_op(denom), pos));
}

Var cntr_gan_term(Tape& t, const GanConfig& cfg, const GanVars& vars, Var x_real, Var x_fake,
                  const AugParams& t1, const AugParams& t2, const AugParams& t3,
                  const AugParams& t4, const CntrConfig& cfg_cntr) {
    auto embed = [&](const AugParams& p, Var x) {
        Var hidden = discriminate(t, cfg, vars.disc, apply_augment(p, x)).hidden;
        return project(t, cfg, vars.proj, hidden);
    };
    Var e_real = t.concat({embed(t1, x_real), embed(t2, x_real)});
    Var e_fake = t.concat({embed(t3, x_fake), embed(t4, x_fake)});
    return t.add(cntr_loss(t, e_real, cfg_cntr.tau), cntr_loss(t, e_fake, cfg_cntr.tau));
}

}  // namespace ganlab
