#include "cibm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cibm/errors.hpp"
#include "cibm/info.hpp"
#include "cibm/losses.hpp"
#include "cibm/rng.hpp"

namespace cibm {

std::vector<Tensor*> CbmModel::params() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < enc_w.size(); ++i) {
    out.push_back(&enc_w[i]);
    out.push_back(&enc_b[i]);
  }
  out.push_back(&mu_w);
  out.push_back(&mu_b);
  out.push_back(&ls_w);
  out.push_back(&ls_b);
  out.push_back(&head_w);
  out.push_back(&head_b);
  return out;
}

std::vector<Tensor*> CbmModel::encoder_and_concept_params() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < enc_w.size(); ++i) {
    out.push_back(&enc_w[i]);
    out.push_back(&enc_b[i]);
  }
  out.push_back(&mu_w);
  out.push_back(&mu_b);
  out.push_back(&ls_w);
  out.push_back(&ls_b);
  return out;
}

std::vector<Tensor*> CbmModel::label_params() { return {&head_w, &head_b}; }

std::vector<const Tensor*> CbmModel::params() const {
  auto mutable_list = const_cast<CbmModel*>(this)->params();
  return std::vector<const Tensor*>(mutable_list.begin(), mutable_list.end());
}

namespace {

Tensor init_dense_w(int out_dim, int in_dim, double bound, RngStream& rng) {
  Tensor w = Tensor::zeros({out_dim, in_dim});
  for (auto& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

Tensor binarize_from_mu(const Tensor& mu) {
  Tensor s = sigmoid_fwd(mu);
  for (auto& v : s.data) v = v > 0.5 ? 1.0 : 0.0;
  return s;
}

Tensor gather_x(const Dataset& ds, const std::vector<int>& idx) {
  Tensor t = Tensor::zeros({static_cast<int>(idx.size()), ds.d});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* src = ds.x_row(idx[r]);
    std::copy(src, src + ds.d, t.data.begin() + static_cast<std::ptrdiff_t>(r) * ds.d);
  }
  return t;
}

Tensor gather_c(const Dataset& ds, const std::vector<int>& idx) {
  Tensor t = Tensor::zeros({static_cast<int>(idx.size()), ds.k});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const uint8_t* src = ds.c_row(idx[r]);
    for (int j = 0; j < ds.k; ++j) t.data[r * static_cast<std::size_t>(ds.k) + j] = src[j];
  }
  return t;
}

std::vector<int> gather_y(const Dataset& ds, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = ds.y[static_cast<std::size_t>(idx[r])];
  return out;
}

std::vector<int> argmax_rows(const Tensor& t) {
  const int n = t.rows();
  const int k = t.cols();
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* row = t.data.data() + static_cast<std::size_t>(i) * k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

}  // namespace

CbmModel init_model(const ModelConfig& cfg, uint64_t seed) {
  if (cfg.in_dim <= 0 || cfg.k <= 0 || cfg.kc <= 0)
    throw validation_error("init_model: dimensions must be positive");
  RngStream rng(seed, "init");
  CbmModel m;
  m.cfg = cfg;
  int prev = cfg.in_dim;
  for (int h : cfg.hidden) {
    if (h <= 0) throw validation_error("init_model: hidden sizes must be positive");
    m.enc_w.push_back(init_dense_w(h, prev, std::sqrt(6.0 / prev), rng));
    m.enc_b.push_back(Tensor::zeros({h}));
    prev = h;
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(prev));
  m.mu_w = init_dense_w(cfg.k, prev, head_bound, rng);
  m.mu_b = Tensor::zeros({cfg.k});
  // bias 0 and small weights keep the initial sigma = exp(ls) near 1
  m.ls_w = init_dense_w(cfg.k, prev, head_bound, rng);
  m.ls_b = Tensor::zeros({cfg.k});
  m.head_w = init_dense_w(cfg.kc, cfg.k, 1.0 / std::sqrt(static_cast<double>(cfg.k)), rng);
  m.head_b = Tensor::zeros({cfg.kc});
  return m;
}

ForwardOut forward_eval(const CbmModel& m, const Tensor& x) {
  ForwardOut o;
  Tensor h = x;
  for (std::size_t i = 0; i < m.enc_w.size(); ++i)
    h = relu_fwd(dense_fwd(h, m.enc_w[i], m.enc_b[i]));
  o.z = std::move(h);
  o.mu = dense_fwd(o.z, m.mu_w, m.mu_b);
  o.sigma = exp_fwd(dense_fwd(o.z, m.ls_w, m.ls_b));
  o.c_logits = o.mu;  // eps = 0
  o.c_down = m.cfg.mode == ConceptMode::hard ? binarize_from_mu(o.mu) : o.c_logits;
  o.y_logits = dense_fwd(o.c_down, m.head_w, m.head_b);
  return o;
}

TrainForward forward_train(const CbmModel& m, const Tensor& x, const Tensor& eps,
                           const Tensor* marginal_x) {
  TrainForward f;
  for (const Tensor* p : m.params()) f.leaves.push_back(leaf(*p));

  const std::size_t n_enc = m.enc_w.size();
  auto lw = [&](std::size_t layer) { return f.leaves[2 * layer]; };
  auto lb = [&](std::size_t layer) { return f.leaves[2 * layer + 1]; };
  const NodePtr mu_w = f.leaves[2 * n_enc], mu_b = f.leaves[2 * n_enc + 1];
  const NodePtr ls_w = f.leaves[2 * n_enc + 2], ls_b = f.leaves[2 * n_enc + 3];
  const NodePtr head_w = f.leaves[2 * n_enc + 4], head_b = f.leaves[2 * n_enc + 5];

  auto encode = [&](const NodePtr& input) {
    NodePtr h = input;
    for (std::size_t i = 0; i < n_enc; ++i) h = relu(dense(lw(i), lb(i), h));
    return h;
  };

  f.x = leaf(x);
  f.z = encode(f.x);
  f.mu = dense(mu_w, mu_b, f.z);
  f.log_sigma = dense(ls_w, ls_b, f.z);
  f.sigma = expv(f.log_sigma);
  f.c_logits = add(f.mu, mul_const(f.sigma, eps));

  if (m.cfg.mode == ConceptMode::hard) {
    // binarized values feed the label head; gradients stop at binarization
    f.c_down = leaf(binarize_from_mu(f.mu->value));
    f.c_sup = f.mu;
  } else {
    f.c_down = f.c_logits;
    f.c_sup = f.c_logits;
  }
  f.y_logits = dense(head_w, head_b, f.c_down);

  // entropy path: same sigma head behind a stop-gradient on z
  f.sigma_hpath = expv(dense(ls_w, ls_b, stop_gradient(f.z)));

  if (marginal_x) {
    NodePtr zm = encode(leaf(*marginal_x));
    f.marg_mu = dense(mu_w, mu_b, zm);
    f.marg_sigma = expv(dense(ls_w, ls_b, zm));
  }
  return f;
}

namespace {

double scalar_value(const NodePtr& n) { return n->value.data[0]; }

// deterministic val-set objective at eps = 0; marginal = leading val rows
double eval_objective(const ForwardOut& fo, const Dataset& val, const FitConfig& cfg,
                      bool include_label_ce) {
  const double bce = scalar_value(bce_with_logits(leaf(fo.c_logits), val.c_tensor()));
  const double ce =
      include_label_ce ? scalar_value(softmax_cross_entropy(leaf(fo.y_logits), val.y)) : 0.0;
  switch (cfg.variant) {
    case LossVariant::vanilla:
      return ce + cfg.lambda_concept * bce;
    case LossVariant::ib_b: {
      const double w = cfg.w_entropy < 0.0 ? (1.0 - cfg.beta) / val.k : cfg.w_entropy;
      return ce + (1.0 - cfg.beta) * bce - w * entropy_c_value(fo.sigma);
    }
    case LossVariant::ib_e: {
      const int m = std::min(cfg.mi_samples, val.n());
      Tensor mu_m = Tensor::zeros({m, val.k});
      Tensor sg_m = Tensor::zeros({m, val.k});
      std::copy(fo.mu.data.begin(), fo.mu.data.begin() + static_cast<std::ptrdiff_t>(m) * val.k,
                mu_m.data.begin());
      std::copy(fo.sigma.data.begin(),
                fo.sigma.data.begin() + static_cast<std::ptrdiff_t>(m) * val.k,
                sg_m.data.begin());
      const double mi = mi_xc_value(fo.c_logits, fo.mu, fo.sigma, mu_m, sg_m);
      return ce + bce + cfg.beta * mi;
    }
  }
  return 0.0;
}

InfoPlanePoint take_snapshot(const CbmModel& model, const Dataset& val, int rows, int epoch) {
  const int n = std::min(rows, val.n());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const Tensor x = gather_x(val, idx);
  const ForwardOut fo = forward_eval(model, x);
  InfoPlanePoint p;
  p.epoch = epoch;
  p.i_xz = mi_plane(x, fo.z);
  p.i_zc = mi_plane(fo.z, fo.mu);
  p.i_xc = mi_plane(x, fo.mu);
  const auto pred = argmax_rows(fo.y_logits);
  const std::vector<int> truth(val.y.begin(), val.y.begin() + n);
  p.i_cy = discrete_mi(pred, truth);
  return p;
}

}  // namespace

FitResult fit(CbmModel& model, const Dataset& train, const Dataset& val, const FitConfig& cfg) {
  if (train.n() == 0 || val.n() == 0)
    throw validation_error("fit: train and val must be non-empty");
  if (cfg.epochs <= 0 || cfg.batch <= 0) throw validation_error("fit: epochs/batch must be > 0");
  if (cfg.variant == LossVariant::ib_e && cfg.mi_samples < 2)
    throw config_error("fit: mi_samples must be >= 2 for the estimator loss");
  if (cfg.beta >= 1.0 && cfg.variant != LossVariant::vanilla)
    throw config_error("fit: beta must be < 1");
  model.groups = train.groups;

  enum class PhaseKind { full, concepts, label_truth, label_frozen };
  struct Phase {
    PhaseKind kind;
    std::vector<Tensor*> trainable;
  };
  std::vector<Phase> phases;
  switch (cfg.regime) {
    case TrainRegime::joint:
      phases.push_back({PhaseKind::full, model.params()});
      break;
    case TrainRegime::independent:
      phases.push_back({PhaseKind::concepts, model.encoder_and_concept_params()});
      phases.push_back({PhaseKind::label_truth, model.label_params()});
      break;
    case TrainRegime::sequential:
      phases.push_back({PhaseKind::concepts, model.encoder_and_concept_params()});
      phases.push_back({PhaseKind::label_frozen, model.label_params()});
      break;
  }

  FitResult res;
  const Tensor val_x = val.x_tensor();
  int epoch_counter = 0;

  for (std::size_t phase_idx = 0; phase_idx < phases.size(); ++phase_idx) {
    Phase& phase = phases[phase_idx];
    AdamState opt(phase.trainable, cfg.adam);

    // map trainable tensors onto the params() leaf order
    std::vector<std::size_t> leaf_index;
    {
      auto all = model.params();
      for (Tensor* t : phase.trainable) {
        const auto it = std::find(all.begin(), all.end(), t);
        leaf_index.push_back(static_cast<std::size_t>(it - all.begin()));
      }
    }

    // inputs for the label-only phases
    Tensor label_in_train, label_in_val;
    if (phase.kind == PhaseKind::label_truth) {
      label_in_train = train.c_tensor();
      label_in_val = val.c_tensor();
    } else if (phase.kind == PhaseKind::label_frozen) {
      label_in_train = forward_eval(model, train.x_tensor()).c_down;
      label_in_val = forward_eval(model, val_x).c_down;
    }

    const bool needs_marginal =
        cfg.variant == LossVariant::ib_e &&
        (phase.kind == PhaseKind::full || phase.kind == PhaseKind::concepts);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      if (phase_idx == 0 && cfg.infoplane_stride > 0 && epoch % cfg.infoplane_stride == 0)
        res.plane.push_back(take_snapshot(model, val, cfg.infoplane_rows, epoch));

      RngStream shuffle_rng(cfg.seed, "shuffle", phase_idx, static_cast<uint64_t>(epoch));
      std::vector<int> order(static_cast<std::size_t>(train.n()));
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

      double loss_sum = 0.0;
      int batches = 0;
      for (int start = 0; start < train.n(); start += cfg.batch) {
        const int bsz = std::min(cfg.batch, train.n() - start);
        std::vector<int> idx(order.begin() + start, order.begin() + start + bsz);

        NodePtr loss;
        std::vector<NodePtr> leaves;
        if (phase.kind == PhaseKind::full || phase.kind == PhaseKind::concepts) {
          RngStream eps_rng(cfg.seed, "eps", phase_idx,
                            static_cast<uint64_t>(epoch) * 1000003ull + static_cast<uint64_t>(start));
          Tensor eps = Tensor::zeros({bsz, train.k});
          for (auto& v : eps.data) v = eps_rng.normal();

          Tensor marg_x;
          if (needs_marginal) {
            RngStream marg_rng(cfg.seed, "marginal", phase_idx,
                               static_cast<uint64_t>(epoch) * 1000003ull + static_cast<uint64_t>(start));
            const int m = std::min(cfg.mi_samples, train.n());
            std::vector<int> midx(static_cast<std::size_t>(m));
            for (auto& v : midx) v = static_cast<int>(marg_rng.uniform_int(static_cast<uint64_t>(train.n())));
            marg_x = gather_x(train, midx);
          }

          TrainForward fwd = forward_train(model, gather_x(train, idx), eps,
                                           needs_marginal ? &marg_x : nullptr);
          Batch batch{gather_c(train, idx), gather_y(train, idx)};
          if (phase.kind == PhaseKind::full) {
            switch (cfg.variant) {
              case LossVariant::vanilla:
                loss = loss_vanilla(fwd, batch, cfg.lambda_concept);
                break;
              case LossVariant::ib_b:
                loss = loss_ib_b(fwd, batch, cfg.beta, cfg.w_entropy);
                break;
              case LossVariant::ib_e:
                loss = loss_ib_e(fwd, batch, cfg.beta);
                break;
            }
          } else {
            loss = loss_concept_phase(fwd, batch, cfg.variant, cfg.beta, cfg.w_entropy,
                                      cfg.lambda_concept);
          }
          leaves = std::move(fwd.leaves);
        } else {
          // label head on fixed inputs (ground truth or frozen predictions)
          Tensor cin = Tensor::zeros({bsz, train.k});
          for (int r = 0; r < bsz; ++r)
            std::copy(label_in_train.data.begin() + static_cast<std::ptrdiff_t>(idx[static_cast<std::size_t>(r)]) * train.k,
                      label_in_train.data.begin() + static_cast<std::ptrdiff_t>(idx[static_cast<std::size_t>(r)] + 1) * train.k,
                      cin.data.begin() + static_cast<std::ptrdiff_t>(r) * train.k);
          NodePtr hw = leaf(model.head_w), hb = leaf(model.head_b);
          loss = softmax_cross_entropy(dense(hw, hb, leaf(cin)), gather_y(train, idx));
          leaves = {hw, hb};
        }

        if (!loss->value.all_finite())
          throw train_error("fit: non-finite loss at epoch " + std::to_string(epoch_counter + 1),
                            epoch_counter + 1);
        backward(loss);
        loss_sum += loss->value.data[0];
        ++batches;

        // leaves the loss never reaches keep an empty grad; treat as zero
        auto grad_of = [](const NodePtr& l) -> const Tensor& {
          if (l->grad.shape != l->value.shape) l->grad = Tensor::zeros(l->value.shape);
          return l->grad;
        };
        std::vector<const Tensor*> grads;
        if (phase.kind == PhaseKind::full || phase.kind == PhaseKind::concepts) {
          for (std::size_t t = 0; t < phase.trainable.size(); ++t)
            grads.push_back(&grad_of(leaves[leaf_index[t]]));
        } else {
          grads = {&grad_of(leaves[0]), &grad_of(leaves[1])};
        }
        adam_step(phase.trainable, grads, opt);
      }

      // per-epoch validation logging
      const ForwardOut fo = forward_eval(model, val_x);
      EpochLog log;
      log.epoch = ++epoch_counter;
      log.train_loss = loss_sum / std::max(batches, 1);
      if (phase.kind == PhaseKind::full) {
        log.val_loss = eval_objective(fo, val, cfg, true);
      } else if (phase.kind == PhaseKind::concepts) {
        log.val_loss = eval_objective(fo, val, cfg, false);
      } else {
        log.val_loss =
            scalar_value(softmax_cross_entropy(leaf(dense_fwd(label_in_val, model.head_w, model.head_b)), val.y));
      }
      int chits = 0;
      const Tensor cprob = sigmoid_fwd(fo.mu);
      for (int i = 0; i < val.n(); ++i)
        for (int j = 0; j < val.k; ++j)
          if ((cprob.at(i, j) > 0.5 ? 1 : 0) == val.c[static_cast<std::size_t>(i) * val.k + j]) ++chits;
      log.concept_acc = static_cast<double>(chits) / (static_cast<double>(val.n()) * val.k);
      const auto pred = argmax_rows(fo.y_logits);
      int yhits = 0;
      for (int i = 0; i < val.n(); ++i)
        if (pred[static_cast<std::size_t>(i)] == val.y[static_cast<std::size_t>(i)]) ++yhits;
      log.class_acc = static_cast<double>(yhits) / val.n();
      log.entropy = entropy_c_value(fo.sigma);
      res.log.push_back(log);
    }
  }
  return res;
}

void calibrate_intervention_percentiles(CbmModel& model, const Dataset& train, double lo_pct,
                                        double hi_pct) {
  if (train.n() == 0) throw validation_error("calibrate: empty dataset");
  const ForwardOut fo = forward_eval(model, train.x_tensor());
  const int n = train.n();
  const int k = model.cfg.k;
  model.p_lo.assign(static_cast<std::size_t>(k), 0.0);
  model.p_hi.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<double> col(static_cast<std::size_t>(n));
  auto pct = [&](double p) {
    const double pos = p / 100.0 * (n - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, n - 1);
    const double frac = pos - lo;
    return col[static_cast<std::size_t>(lo)] * (1.0 - frac) + col[static_cast<std::size_t>(hi)] * frac;
  };
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = fo.mu.at(i, j);
    std::sort(col.begin(), col.end());
    model.p_lo[static_cast<std::size_t>(j)] = pct(lo_pct);
    model.p_hi[static_cast<std::size_t>(j)] = pct(hi_pct);
  }
}

ForwardOut intervene(const ForwardOut& out, const std::vector<uint8_t>& c_true,
                     const std::vector<int>& group_ids, const CbmModel& model) {
  if (model.groups.empty())
    throw contract_error("intervene: model carries no concept group metadata");
  const int b = out.c_down.rows();
  const int k = out.c_down.cols();
  if (static_cast<int>(c_true.size()) != b * k)
    throw dim_error("intervene: c_true size does not match batch");
  for (uint8_t v : c_true)
    if (v > 1) throw validation_error("intervene: c_true must be binary");
  const bool hard = model.cfg.mode == ConceptMode::hard;
  if (!hard && !model.calibrated())
    throw contract_error("intervene: soft-mode intervention needs calibrated percentiles");

  ForwardOut o = out;
  for (int gi : group_ids) {
    if (gi < 0 || gi >= static_cast<int>(model.groups.size()))
      throw validation_error("intervene: unknown group id " + std::to_string(gi));
    for (int col : model.groups[static_cast<std::size_t>(gi)]) {
      for (int i = 0; i < b; ++i) {
        const bool truth = c_true[static_cast<std::size_t>(i) * k + col] != 0;
        o.c_down.at(i, col) = hard ? (truth ? 1.0 : 0.0)
                                   : (truth ? model.p_hi[static_cast<std::size_t>(col)]
                                            : model.p_lo[static_cast<std::size_t>(col)]);
      }
    }
  }
  o.y_logits = dense_fwd(o.c_down, model.head_w, model.head_b);
  return o;
}

namespace {

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  os << "tensor " << name << ' ' << t.rank();
  for (int d : t.shape) os << ' ' << d;
  for (double v : t.data) os << ' ' << hex_double(v);
  os << '\n';
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const CbmModel& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < m.enc_w.size(); ++i) {
    out.emplace_back("enc_w" + std::to_string(i), &m.enc_w[i]);
    out.emplace_back("enc_b" + std::to_string(i), &m.enc_b[i]);
  }
  out.emplace_back("mu_w", &m.mu_w);
  out.emplace_back("mu_b", &m.mu_b);
  out.emplace_back("ls_w", &m.ls_w);
  out.emplace_back("ls_b", &m.ls_b);
  out.emplace_back("head_w", &m.head_w);
  out.emplace_back("head_b", &m.head_b);
  return out;
}

}  // namespace

void save_checkpoint(const CbmModel& model, const std::string& path,
                     const std::string& config_echo) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw data_error("cannot write checkpoint " + path);
  os << "cibm-checkpoint v1\n";
  os << "mode " << (model.cfg.mode == ConceptMode::hard ? "hard" : "soft") << '\n';
  os << "in_dim " << model.cfg.in_dim << '\n';
  os << "concepts " << model.cfg.k << '\n';
  os << "classes " << model.cfg.kc << '\n';
  os << "hidden";
  if (model.cfg.hidden.empty()) os << " -";
  for (int h : model.cfg.hidden) os << ' ' << h;
  os << '\n';
  os << "groups";
  if (model.groups.empty()) os << " -";
  for (std::size_t gi = 0; gi < model.groups.size(); ++gi) {
    os << (gi ? ";" : " ");
    for (std::size_t j = 0; j < model.groups[gi].size(); ++j)
      os << (j ? "," : "") << model.groups[gi][j];
  }
  os << '\n';
  os << "calibrated " << (model.calibrated() ? 1 : 0) << '\n';
  if (model.calibrated()) {
    os << "p_lo";
    for (double v : model.p_lo) os << ' ' << hex_double(v);
    os << "\np_hi";
    for (double v : model.p_hi) os << ' ' << hex_double(v);
    os << '\n';
  }
  std::istringstream cfg_lines(config_echo);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(cfg_lines, line)) lines.push_back(line);
  os << "config_lines " << lines.size() << '\n';
  for (const auto& l : lines) os << l << '\n';
  const auto tensors = named_tensors(model);
  os << "tensors " << tensors.size() << '\n';
  for (const auto& [name, t] : tensors) write_tensor(os, name, *t);
  os << "end\n";
  if (!os) throw data_error("write failed for checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot open checkpoint " + path);
  std::string line;
  auto fail = [&](const std::string& why) -> std::runtime_error {
    return data_error("checkpoint " + path + ": " + why);
  };
  if (!std::getline(is, line) || line != "cibm-checkpoint v1") throw fail("bad magic");

  Checkpoint ck;
  ModelConfig cfg;
  std::string word;

  auto expect_key = [&](const std::string& key) {
    std::string k;
    is >> k;
    if (k != key) throw fail("expected '" + key + "', got '" + k + "'");
  };

  expect_key("mode");
  is >> word;
  cfg.mode = word == "hard" ? ConceptMode::hard : ConceptMode::soft;
  expect_key("in_dim");
  is >> cfg.in_dim;
  expect_key("concepts");
  is >> cfg.k;
  expect_key("classes");
  is >> cfg.kc;
  expect_key("hidden");
  cfg.hidden.clear();
  std::getline(is, line);
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok)
      if (tok != "-") cfg.hidden.push_back(std::stoi(tok));
  }
  expect_key("groups");
  std::getline(is, line);
  std::vector<std::vector<int>> groups;
  {
    std::istringstream gs(line);
    std::string tok;
    gs >> tok;
    if (tok != "-" && !tok.empty()) {
      std::istringstream parts(tok);
      std::string grp;
      while (std::getline(parts, grp, ';')) {
        std::vector<int> g;
        std::istringstream ms(grp);
        std::string mem;
        while (std::getline(ms, mem, ',')) g.push_back(std::stoi(mem));
        groups.push_back(std::move(g));
      }
    }
  }
  expect_key("calibrated");
  int calib = 0;
  is >> calib;
  std::vector<double> p_lo, p_hi;
  if (calib) {
    auto read_p = [&](const std::string& key, std::vector<double>& dst) {
      expect_key(key);
      std::getline(is, line);
      std::istringstream ps(line);
      std::string tok;
      while (ps >> tok) dst.push_back(std::strtod(tok.c_str(), nullptr));
    };
    read_p("p_lo", p_lo);
    read_p("p_hi", p_hi);
  }
  expect_key("config_lines");
  int n_cfg = 0;
  is >> n_cfg;
  std::getline(is, line);  // rest of the count line
  std::string echo;
  for (int i = 0; i < n_cfg; ++i) {
    if (!std::getline(is, line)) throw fail("truncated config echo");
    echo += line;
    echo += '\n';
  }
  expect_key("tensors");
  int n_tensors = 0;
  is >> n_tensors;

  ck.model = CbmModel{};
  ck.model.cfg = cfg;
  ck.model.enc_w.resize(cfg.hidden.size());
  ck.model.enc_b.resize(cfg.hidden.size());

  for (int t = 0; t < n_tensors; ++t) {
    expect_key("tensor");
    std::string name;
    int nd = 0;
    is >> name >> nd;
    std::vector<int> shape(static_cast<std::size_t>(nd));
    for (auto& d : shape) is >> d;
    Tensor ten = Tensor::zeros(shape);
    for (auto& v : ten.data) {
      is >> word;
      v = std::strtod(word.c_str(), nullptr);
    }
    if (name.rfind("enc_w", 0) == 0)
      ck.model.enc_w[static_cast<std::size_t>(std::stoi(name.substr(5)))] = std::move(ten);
    else if (name.rfind("enc_b", 0) == 0)
      ck.model.enc_b[static_cast<std::size_t>(std::stoi(name.substr(5)))] = std::move(ten);
    else if (name == "mu_w")
      ck.model.mu_w = std::move(ten);
    else if (name == "mu_b")
      ck.model.mu_b = std::move(ten);
    else if (name == "ls_w")
      ck.model.ls_w = std::move(ten);
    else if (name == "ls_b")
      ck.model.ls_b = std::move(ten);
    else if (name == "head_w")
      ck.model.head_w = std::move(ten);
    else if (name == "head_b")
      ck.model.head_b = std::move(ten);
    else
      throw fail("unknown tensor '" + name + "'");
  }
  is >> word;
  if (word != "end") throw fail("missing end marker");

  ck.model.groups = std::move(groups);
  ck.model.p_lo = std::move(p_lo);
  ck.model.p_hi = std::move(p_hi);
  ck.config_echo = std::move(echo);
  return ck;
}

}  // namespace cibm
