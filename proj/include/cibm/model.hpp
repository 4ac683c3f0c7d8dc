#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cibm/adam.hpp"
#include "cibm/data.hpp"
#include "cibm/graph.hpp"
#include "cibm/tensor.hpp"

namespace cibm {

enum class ConceptMode { soft, hard };
enum class TrainRegime { joint, independent, sequential };
enum class LossVariant { vanilla, ib_b, ib_e };

struct ModelConfig {
  int in_dim = 0;
  int k = 0;   // concepts
  int kc = 0;  // classes
  std::vector<int> hidden{64, 64};
  ConceptMode mode = ConceptMode::soft;
};

// Encoder p(z|x) as a ReLU MLP, variational heads q(c|z) for mu and
// log-sigma, label head q(y|c). Percentiles store the replacement logits for
// soft test-time interventions.
struct CbmModel {
  ModelConfig cfg;
  std::vector<Tensor> enc_w, enc_b;
  Tensor mu_w, mu_b;
  Tensor ls_w, ls_b;  // log-sigma head
  Tensor head_w, head_b;
  std::vector<double> p_lo, p_hi;            // per-concept intervention logits
  std::vector<std::vector<int>> groups;      // concept groups seen at fit time

  bool calibrated() const { return !p_lo.empty(); }
  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  std::vector<Tensor*> encoder_and_concept_params();
  std::vector<Tensor*> label_params();
};

CbmModel init_model(const ModelConfig& cfg, uint64_t seed);

// Deterministic eval pass (eps = 0): c_logits == mu.
struct ForwardOut {
  Tensor z, mu, sigma, c_logits, c_down, y_logits;
};
ForwardOut forward_eval(const CbmModel& m, const Tensor& x);

// Training-graph pass. All parameter leaves are shared between the batch and
// the optional marginal branch so gradients accumulate naturally.
struct TrainForward {
  std::vector<NodePtr> leaves;  // aligned with CbmModel::params()
  NodePtr x, z, mu, log_sigma, sigma, c_logits, c_down, y_logits;
  NodePtr c_sup;        // logits the concept BCE supervises (sampled in soft, mu in hard)
  NodePtr sigma_hpath;  // sigma recomputed behind stop_gradient(z), for the entropy term
  NodePtr marg_mu, marg_sigma;  // null unless marginal rows were supplied
};
TrainForward forward_train(const CbmModel& m, const Tensor& x, const Tensor& eps,
                           const Tensor* marginal_x = nullptr);

struct FitConfig {
  TrainRegime regime = TrainRegime::joint;
  LossVariant variant = LossVariant::vanilla;
  double beta = 0.5;
  double lambda_concept = 1.0;
  double w_entropy = -1.0;  // < 0 selects the (1 - beta) default
  int mi_samples = 64;
  int epochs = 100;
  int batch = 128;
  AdamConfig adam;
  uint64_t seed = 1;
  int infoplane_stride = 0;  // 0 disables snapshots
  int infoplane_rows = 768;
};

struct EpochLog {
  int epoch;
  double train_loss, val_loss, concept_acc, class_acc, entropy;
};

struct InfoPlanePoint {
  int epoch;
  double i_xc, i_cy, i_xz, i_zc;
};

struct FitResult {
  std::vector<EpochLog> log;
  std::vector<InfoPlanePoint> plane;
};

// joint: one phase over the full objective. independent: phase 1 fits the
// encoder and concept heads, phase 2 fits the label head on ground-truth
// concepts. sequential: phase 2 fits the label head on frozen predictions.
FitResult fit(CbmModel& model, const Dataset& train, const Dataset& val, const FitConfig& cfg);

// Stores the 5th/95th percentiles of predicted mu per concept.
void calibrate_intervention_percentiles(CbmModel& model, const Dataset& train,
                                        double lo_pct = 5.0, double hi_pct = 95.0);

// Replaces c_down entries of the selected groups with ground truth (hard) or
// the calibrated percentile logits (soft) and recomputes y_logits.
ForwardOut intervene(const ForwardOut& out, const std::vector<uint8_t>& c_true,
                     const std::vector<int>& group_ids, const CbmModel& model);

void save_checkpoint(const CbmModel& model, const std::string& path,
                     const std::string& config_echo);
struct Checkpoint {
  CbmModel model;
  std::string config_echo;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cibm
