#include "cibm/losses.hpp"

#include "cibm/errors.hpp"
#include "cibm/info.hpp"

namespace cibm {

namespace {

std::vector<int> check_batch(const TrainForward& out, const Batch& batch) {
  if (!out.c_sup->value.same_shape(batch.c_true))
    throw dim_error("loss: concept logits " + shape_str(out.c_sup->value.shape) +
                    " vs targets " + shape_str(batch.c_true.shape));
  return batch.y;
}

}  // namespace

NodePtr loss_vanilla(const TrainForward& out, const Batch& batch, double lambda_concept) {
  const auto& y = check_batch(out, batch);
  NodePtr ce = softmax_cross_entropy(out.y_logits, y);
  NodePtr bce = bce_with_logits(out.c_sup, batch.c_true);
  return add(ce, scale(bce, lambda_concept));
}

NodePtr loss_ib_b(const TrainForward& out, const Batch& batch, double beta, double w_entropy) {
  if (beta >= 1.0) throw config_error("loss_ib_b: beta must be < 1");
  // default matches the per-concept balance of the bound: BCE_c is a mean
  // over K concepts while H(C) sums log-sigmas over them
  if (w_entropy < 0.0) w_entropy = (1.0 - beta) / out.c_sup->value.cols();
  const auto& y = check_batch(out, batch);
  NodePtr ce = softmax_cross_entropy(out.y_logits, y);
  NodePtr bce = bce_with_logits(out.c_sup, batch.c_true);
  NodePtr loss = add(ce, scale(bce, 1.0 - beta));
  if (w_entropy != 0.0)
    loss = sub(loss, scale(entropy_c(out.sigma_hpath), w_entropy));
  return loss;
}

NodePtr loss_ib_e(const TrainForward& out, const Batch& batch, double beta) {
  if (!out.marg_mu || !out.marg_sigma)
    throw contract_error("loss_ib_e: forward pass carries no marginal batch");
  const auto& y = check_batch(out, batch);
  NodePtr ce = softmax_cross_entropy(out.y_logits, y);
  NodePtr bce = bce_with_logits(out.c_sup, batch.c_true);
  NodePtr loss = add(ce, scale(bce, 1.0));
  if (beta != 0.0) {
    NodePtr mi = mi_xc(out.c_logits, out.mu, out.sigma, out.marg_mu, out.marg_sigma);
    loss = add(loss, scale(mi, beta));
  }
  return loss;
}

NodePtr loss_concept_phase(const TrainForward& out, const Batch& batch, LossVariant variant,
                           double beta, double w_entropy, double lambda_concept) {
  if (!out.c_sup->value.same_shape(batch.c_true))
    throw dim_error("loss: concept logits " + shape_str(out.c_sup->value.shape) +
                    " vs targets " + shape_str(batch.c_true.shape));
  NodePtr bce = bce_with_logits(out.c_sup, batch.c_true);
  switch (variant) {
    case LossVariant::vanilla:
      return scale(bce, lambda_concept);
    case LossVariant::ib_b: {
      if (beta >= 1.0) throw config_error("loss_concept_phase: beta must be < 1");
      if (w_entropy < 0.0) w_entropy = (1.0 - beta) / out.c_sup->value.cols();
      NodePtr loss = scale(bce, 1.0 - beta);
      if (w_entropy != 0.0)
        loss = sub(loss, scale(entropy_c(out.sigma_hpath), w_entropy));
      return loss;
    }
    case LossVariant::ib_e: {
      if (!out.marg_mu || !out.marg_sigma)
        throw contract_error("loss_concept_phase: forward pass carries no marginal batch");
      NodePtr loss = scale(bce, 1.0);
      if (beta != 0.0) {
        NodePtr mi = mi_xc(out.c_logits, out.mu, out.sigma, out.marg_mu, out.marg_sigma);
        loss = add(loss, scale(mi, beta));
      }
      return loss;
    }
  }
  throw contract_error("loss_concept_phase: unknown variant");
}

}  // namespace cibm
