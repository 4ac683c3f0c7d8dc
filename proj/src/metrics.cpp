#include "cibm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cibm/errors.hpp"
#include "cibm/probe.hpp"
#include "cibm/rng.hpp"

namespace cibm {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw dim_error("accuracy: length mismatch");
  if (pred.empty()) throw validation_error("accuracy: empty input");
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double concept_accuracy(const std::vector<double>& c_prob, const std::vector<uint8_t>& c_true,
                        double tau) {
  if (c_prob.size() != c_true.size()) throw dim_error("concept_accuracy: length mismatch");
  if (c_prob.empty()) throw validation_error("concept_accuracy: empty input");
  int hits = 0;
  for (std::size_t i = 0; i < c_prob.size(); ++i)
    if ((c_prob[i] > tau ? 1 : 0) == c_true[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(c_prob.size());
}

double auc_roc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) throw dim_error("auc_roc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (uint8_t l : labels) pos += l ? 1 : 0;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw undefined_metric_error("auc_roc: labels contain a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks over tied scores; rank sums stay exact (multiples of 0.5)
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (labels[order[t]]) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

bool PurityMatrix::any_flagged() const {
  for (uint8_t f : flag)
    if (f) return true;
  return false;
}

PurityMatrix purity_matrix(const std::vector<double>& reps, int n, int k,
                           const std::vector<uint8_t>& c_true) {
  if (reps.size() != static_cast<std::size_t>(n) * k ||
      c_true.size() != static_cast<std::size_t>(n) * k)
    throw dim_error("purity_matrix: reps/c_true must be n x k");
  PurityMatrix out;
  out.k = k;
  out.pi.assign(static_cast<std::size_t>(k) * k, 0.5);
  out.flag.assign(static_cast<std::size_t>(k) * k, 0);

  std::vector<double> score(static_cast<std::size_t>(n));
  std::vector<uint8_t> target(static_cast<std::size_t>(n));
  for (int j = 0; j < k; ++j) {
    for (int r = 0; r < n; ++r) target[static_cast<std::size_t>(r)] = c_true[static_cast<std::size_t>(r) * k + j];
    bool constant = true;
    for (int r = 1; r < n; ++r)
      if (target[static_cast<std::size_t>(r)] != target[0]) {
        constant = false;
        break;
      }
    for (int i = 0; i < k; ++i) {
      if (constant) {
        out.flag[static_cast<std::size_t>(i) * k + j] = 1;
        continue;  // entry stays 0.5
      }
      for (int r = 0; r < n; ++r) score[static_cast<std::size_t>(r)] = reps[static_cast<std::size_t>(r) * k + i];
      const double a = auc_roc(score, target);
      out.pi[static_cast<std::size_t>(i) * k + j] = std::max(a, 1.0 - a);
    }
  }
  return out;
}

double ois(const PurityMatrix& pred, const PurityMatrix& truth) {
  if (pred.k != truth.k) throw dim_error("ois: purity matrices differ in size");
  if (pred.k < 2) throw validation_error("ois: needs at least 2 concepts");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.pi.size(); ++i) {
    const double d = pred.pi[i] - truth.pi[i];
    sq += d * d;
  }
  return 2.0 * std::sqrt(sq) / static_cast<double>(pred.k);
}

double ois(const std::vector<double>& reps, int n, int k, const std::vector<uint8_t>& c_true) {
  std::vector<double> truth_reps(c_true.size());
  for (std::size_t i = 0; i < c_true.size(); ++i) truth_reps[i] = c_true[i];
  return ois(purity_matrix(reps, n, k, c_true), purity_matrix(truth_reps, n, k, c_true));
}

double nis(const std::vector<double>& reps, int n, int k, const std::vector<uint8_t>& c_true,
           const NisConfig& cfg) {
  if (reps.size() != static_cast<std::size_t>(n) * k ||
      c_true.size() != static_cast<std::size_t>(n) * k)
    throw dim_error("nis: reps/c_true must be n x k");
  std::vector<double> grid = cfg.beta_grid;
  if (grid.empty())
    for (int i = 0; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
  if (grid.size() < 2) throw config_error("nis: beta grid needs at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1] || grid[i] > 1.0 || grid.front() < 0.0)
      throw config_error("nis: beta grid must be ascending within [0,1]");

  std::vector<double> truth_reps(c_true.size());
  for (std::size_t i = 0; i < c_true.size(); ++i) truth_reps[i] = c_true[i];
  const PurityMatrix pi_true = purity_matrix(truth_reps, n, k, c_true);

  // fixed 70/30 split
  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  RngStream rng(cfg.seed, "nis-split");
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.uniform_int(i)]);
  const int n_hold = static_cast<int>(std::round(cfg.holdout_fraction * n));
  const int n_fit = n - n_hold;
  if (n_fit < 2 || n_hold < 2) throw validation_error("nis: too few rows for the probe split");

  std::vector<double> ni_mean(grid.size(), 0.0);
  for (int i = 0; i < k; ++i) {
    std::map<std::vector<uint8_t>, double> cache;  // impurity mask -> NI
    for (std::size_t b = 0; b < grid.size(); ++b) {
      std::vector<uint8_t> impurity(static_cast<std::size_t>(k), 0);
      int n_imp = 0;
      for (int j = 0; j < k; ++j) {
        // niche of i: concepts j whose ground truth predicts i at AUC >= beta
        if (pi_true.at(j, i) >= grid[b]) continue;
        impurity[static_cast<std::size_t>(j)] = 1;
        ++n_imp;
      }
      double ni = 0.5;  // empty impurity set
      if (n_imp > 0) {
        const auto it = cache.find(impurity);
        if (it != cache.end()) {
          ni = it->second;
        } else {
          std::vector<double> fit_x(static_cast<std::size_t>(n_fit) * n_imp);
          std::vector<uint8_t> fit_y(static_cast<std::size_t>(n_fit));
          for (int r = 0; r < n_fit; ++r) {
            const int row = rows[static_cast<std::size_t>(r)];
            int fcol = 0;
            for (int j = 0; j < k; ++j)
              if (impurity[static_cast<std::size_t>(j)])
                fit_x[static_cast<std::size_t>(r) * n_imp + fcol++] =
                    reps[static_cast<std::size_t>(row) * k + j];
            fit_y[static_cast<std::size_t>(r)] = c_true[static_cast<std::size_t>(row) * k + i];
          }
          const BinaryProbe probe =
              train_binary_probe(fit_x, n_fit, n_imp, fit_y, cfg.probe_iters, cfg.probe_lr);
          std::vector<double> hold_scores(static_cast<std::size_t>(n_hold));
          std::vector<uint8_t> hold_y(static_cast<std::size_t>(n_hold));
          std::vector<double> feat(static_cast<std::size_t>(n_imp));
          for (int r = 0; r < n_hold; ++r) {
            const int row = rows[static_cast<std::size_t>(n_fit + r)];
            int fcol = 0;
            for (int j = 0; j < k; ++j)
              if (impurity[static_cast<std::size_t>(j)])
                feat[static_cast<std::size_t>(fcol++)] = reps[static_cast<std::size_t>(row) * k + j];
            hold_scores[static_cast<std::size_t>(r)] = probe.score(feat.data());
            hold_y[static_cast<std::size_t>(r)] = c_true[static_cast<std::size_t>(row) * k + i];
          }
          try {
            ni = auc_roc(hold_scores, hold_y);
          } catch (const undefined_metric_error&) {
            ni = 0.5;
          }
          cache.emplace(impurity, ni);
        }
      }
      ni_mean[b] += ni / static_cast<double>(k);
    }
  }

  // trapezoid over the grid
  double integral = 0.0;
  for (std::size_t b = 1; b < grid.size(); ++b)
    integral += 0.5 * (ni_mean[b] + ni_mean[b - 1]) * (grid[b] - grid[b - 1]);
  const double width = grid.back() - grid.front();
  return integral / width;
}

InterventionCurve intervention_curve(const CbmModel& model, const Dataset& ds, int repeats,
                                     uint64_t seed) {
  if (!model.calibrated())
    throw contract_error("intervention_curve: model has no intervention percentiles");
  if (model.groups.empty())
    throw contract_error("intervention_curve: model has no concept group metadata");
  if (repeats < 1) throw validation_error("intervention_curve: repeats must be >= 1");

  const int g_total = static_cast<int>(model.groups.size());
  const ForwardOut base = forward_eval(model, ds.x_tensor());
  auto acc_of = [&](const Tensor& y_logits) {
    int hits = 0;
    for (int i = 0; i < ds.n(); ++i) {
      const double* row = y_logits.data.data() + static_cast<std::size_t>(i) * ds.kc;
      const int pred = static_cast<int>(std::max_element(row, row + ds.kc) - row);
      if (pred == ds.y[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / ds.n();
  };
  const double acc0 = acc_of(base.y_logits);

  InterventionCurve out;
  out.repeats = repeats;
  out.seed = seed;
  out.per_repeat.assign(static_cast<std::size_t>(repeats),
                        std::vector<double>(static_cast<std::size_t>(g_total + 1), acc0));

  for (int r = 0; r < repeats; ++r) {
    RngStream rng(seed, "tti", static_cast<uint64_t>(r));
    for (int g = 1; g <= g_total; ++g) {
      std::vector<int> ids(static_cast<std::size_t>(g_total));
      std::iota(ids.begin(), ids.end(), 0);
      for (int t = 0; t < g; ++t) {
        const int j = t + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(g_total - t)));
        std::swap(ids[static_cast<std::size_t>(t)], ids[static_cast<std::size_t>(j)]);
      }
      ids.resize(static_cast<std::size_t>(g));
      const ForwardOut edited = intervene(base, ds.c, ids, model);
      out.per_repeat[static_cast<std::size_t>(r)][static_cast<std::size_t>(g)] =
          acc_of(edited.y_logits);
    }
  }

  out.mean.assign(static_cast<std::size_t>(g_total + 1), 0.0);
  out.std_dev.assign(static_cast<std::size_t>(g_total + 1), 0.0);
  for (int g = 0; g <= g_total; ++g) {
    double m = 0.0;
    for (int r = 0; r < repeats; ++r) m += out.per_repeat[static_cast<std::size_t>(r)][static_cast<std::size_t>(g)];
    m /= repeats;
    out.mean[static_cast<std::size_t>(g)] = m;
    if (repeats > 1) {
      double sq = 0.0;
      for (int r = 0; r < repeats; ++r) {
        const double d = out.per_repeat[static_cast<std::size_t>(r)][static_cast<std::size_t>(g)] - m;
        sq += d * d;
      }
      out.std_dev[static_cast<std::size_t>(g)] = std::sqrt(sq / (repeats - 1));
    }
  }
  return out;
}

double auc_tti(const std::vector<double>& curve) {
  if (curve.size() < 2) throw validation_error("auc_tti: curve needs at least I(0) and I(1)");
  double acc = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) acc += curve[i];
  return acc / static_cast<double>(curve.size() - 1);
}

double nauc_tti(const std::vector<double>& curve) {
  if (curve.size() < 2) throw validation_error("nauc_tti: curve needs at least I(0) and I(1)");
  // telescoping sum of per-step gains
  return (curve.back() - curve.front()) / static_cast<double>(curve.size() - 1);
}

double auc_tti(const InterventionCurve& curve) { return auc_tti(curve.mean); }
double nauc_tti(const InterventionCurve& curve) { return nauc_tti(curve.mean); }

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw validation_error("spearman: bad inputs");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace cibm
