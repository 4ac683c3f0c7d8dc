#pragma once

#include <cstdint>
#include <vector>

#include "cibm/data.hpp"
#include "cibm/model.hpp"

namespace cibm {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// mean elementwise correctness of (prob > tau) against binary truth
double concept_accuracy(const std::vector<double>& c_prob, const std::vector<uint8_t>& c_true,
                        double tau = 0.5);

// Mann-Whitney AUC: (wins + 0.5 ties) / (P * N). Throws
// undefined_metric_error when labels are single-class.
double auc_roc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// pi[i][j] = orientation-corrected AUC for predicting ground-truth concept j
// from representation column i; entries with a constant target are 0.5 and
// flagged.
struct PurityMatrix {
  int k = 0;
  std::vector<double> pi;
  std::vector<uint8_t> flag;

  double at(int i, int j) const { return pi[static_cast<std::size_t>(i) * k + j]; }
  bool any_flagged() const;
};

PurityMatrix purity_matrix(const std::vector<double>& reps, int n, int k,
                           const std::vector<uint8_t>& c_true);

// 2/k * Frobenius distance between the predicted-representation purity matrix
// and the ground-truth purity matrix; 0 means perfect alignment.
double ois(const PurityMatrix& pred, const PurityMatrix& truth);
double ois(const std::vector<double>& reps, int n, int k, const std::vector<uint8_t>& c_true);

struct NisConfig {
  std::vector<double> beta_grid;  // empty selects 21 evenly spaced points in [0,1]
  int probe_iters = 200;
  double probe_lr = 0.05;
  double holdout_fraction = 0.3;
  uint64_t seed = 13;
};

// Threshold-integrated AUC of predicting each concept from the
// representations outside its entanglement niche; 0.5 means no impurity.
double nis(const std::vector<double>& reps, int n, int k, const std::vector<uint8_t>& c_true,
           const NisConfig& cfg = {});

struct InterventionCurve {
  std::vector<double> mean;     // I(0..G)
  std::vector<double> std_dev;  // sample std over repeats
  std::vector<std::vector<double>> per_repeat;
  int repeats = 0;
  uint64_t seed = 0;
};

// I(g) = class accuracy after intervening on g uniformly sampled groups,
// averaged over repeats; I(0) is the unintervened accuracy.
InterventionCurve intervention_curve(const CbmModel& model, const Dataset& ds, int repeats = 5,
                                     uint64_t seed = 0);

double auc_tti(const std::vector<double>& curve);
double nauc_tti(const std::vector<double>& curve);  // == (I(n) - I(0)) / n
double auc_tti(const InterventionCurve& curve);
double nauc_tti(const InterventionCurve& curve);

// rank correlation with average ranks on ties; 0 when either side is constant
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cibm
