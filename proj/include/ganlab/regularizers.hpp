#pragma once

#include "ganlab/augment.hpp"
#include "ganlab/gan.hpp"

namespace ganlab {

struct BcrConfig {
    double lambda = 10.0;
};

struct CntrConfig {
    double lambda = 0.1;
    double tau = 0.1;
};

// Balanced consistency penalty: batch-mean squared logit difference between
// clean and augmented copies, real and fake terms summed.
Var bcr_loss(Tape& tape, const GanConfig& cfg, const std::vector<Var>& disc, Var x_real,
             Var x_fake, const AugParams& t1, const AugParams& t2);

// Same penalty expressed on precomputed logits.
Var bcr_from_logits(Tape& tape, Var clean_real, Var aug_real, Var clean_fake, Var aug_fake);

// NT-Xent over a (2N,d) batch laid out as N originals followed by their N
// augmented partners; mean over all 2N ordered positive pairs.
Var cntr_loss(Tape& tape, Var embeddings, double tau);

// Algorithm-level term: CntrLoss over two augmented real copies plus
// CntrLoss over two augmented fake copies, embeddings via the projection
// head on the discriminator's hidden representation.
Var cntr_gan_term(Tape& tape, const GanConfig& cfg, const GanVars& vars, Var x_real, Var x_fake,
                  const AugParams& t1, const AugParams& t2, const AugParams& t3,
                  const AugParams& t4, const CntrConfig& cfg_cntr);

}  // namespace ganlab
