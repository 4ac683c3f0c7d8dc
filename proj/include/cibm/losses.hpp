#pragma once

#include <vector>

#include "cibm/graph.hpp"
#include "cibm/model.hpp"

namespace cibm {

struct Batch {
  Tensor c_true;       // [B x K], values 0/1
  std::vector<int> y;  // [B]
};

// softmax CE on labels + lambda * BCE on concept logits
NodePtr loss_vanilla(const TrainForward& out, const Batch& batch, double lambda_concept);

// CE_y + (1-beta) BCE_c - w_entropy * H(C), with the entropy gradient blocked
// from the encoder (computed on the stop-gradient sigma path).
// w_entropy < 0 selects the (1-beta) default.
NodePtr loss_ib_b(const TrainForward& out, const Batch& batch, double beta,
                  double w_entropy = -1.0);

// CE_y + BCE_c + beta * I(X;C); requires out.marg_mu/marg_sigma. The additive
// rho constant of the bound is dropped from optimization.
NodePtr loss_ib_e(const TrainForward& out, const Batch& batch, double beta);

// Phase-1 objective for the independent/sequential regimes: the label CE term
// is omitted, the concept and IB terms follow the selected variant.
NodePtr loss_concept_phase(const TrainForward& out, const Batch& batch, LossVariant variant,
                           double beta, double w_entropy = -1.0,
                           double lambda_concept = 1.0);

}  // namespace cibm
