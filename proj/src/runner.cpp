#include "cibm/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "cibm/errors.hpp"
#include "cibm/info.hpp"
#include "cibm/metrics.hpp"
#include "cibm/probe.hpp"
#include "cibm/rng.hpp"
#include "cibm/svg.hpp"

namespace cibm {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw data_error("cannot write " + path);
  return os;
}

struct LoadedData {
  Dataset full;
  SplitResult splits;
};

LoadedData load_data(const TrainConfig& cfg) {
  LoadedData d;
  d.full = cfg.data == "synthetic" ? make_synthetic(cfg.synth) : load_concept_csv(cfg.data);
  d.splits = split(d.full, cfg.split_train, cfg.split_val, cfg.split_test, cfg.split_seed);
  return d;
}

ModelConfig model_config(const TrainConfig& cfg, const Dataset& ds) {
  ModelConfig mc;
  mc.in_dim = ds.d;
  mc.k = ds.k;
  mc.kc = ds.kc;
  mc.hidden = cfg.hidden;
  mc.mode = cfg.mode_enum();
  return mc;
}

struct MeanStd {
  double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double sq = 0.0;
    for (double x : v) sq += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(sq / static_cast<double>(v.size() - 1));
  }
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

struct TestMetrics {
  double class_acc = 0.0, concept_acc = 0.0;
};

TestMetrics test_metrics(const CbmModel& model, const Dataset& test) {
  const ForwardOut fo = forward_eval(model, test.x_tensor());
  TestMetrics tm;
  tm.class_acc = accuracy(argmax_rows(fo.y_logits), test.y);
  const Tensor prob = sigmoid_fwd(fo.mu);
  tm.concept_acc = concept_accuracy(prob.data, test.c);
  return tm;
}

std::string ckpt_path(const TrainConfig& cfg, uint64_t seed) {
  return cfg.out + "/checkpoint_seed" + std::to_string(seed) + ".txt";
}

CbmModel train_one(const TrainConfig& cfg, const SplitResult& splits, uint64_t seed,
                   FitResult* out_fit, int infoplane_stride = 0) {
  CbmModel model = init_model(model_config(cfg, splits.train), seed);
  FitConfig fc = cfg.fit_config(seed);
  fc.infoplane_stride = infoplane_stride;
  FitResult res = fit(model, splits.train, splits.val, fc);
  calibrate_intervention_percentiles(model, splits.train);
  if (out_fit) *out_fit = std::move(res);
  return model;
}

void write_train_log(const std::string& path, const FitResult& res) {
  auto os = open_out(path);
  os << "epoch,train_loss,val_loss,concept_acc,class_acc\n";
  for (const auto& e : res.log)
    os << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.val_loss) << ','
       << fmt(e.concept_acc) << ',' << fmt(e.class_acc) << '\n';
}

void write_entropy_log(const std::string& path, const FitResult& res) {
  auto os = open_out(path);
  os << "t,H\n";
  for (const auto& e : res.log) os << e.epoch << ',' << fmt(e.entropy) << '\n';
}

void write_metric_report(const TrainConfig& cfg, const std::string& stem,
                         const std::vector<std::tuple<std::string, double, double, int>>& rows,
                         double wallclock_s) {
  auto os = open_out(cfg.out + "/" + stem + ".csv");
  os << "name,value,std,n_seeds\n";
  for (const auto& [name, value, sd, n] : rows)
    os << name << ',' << fmt(value) << ',' << fmt(sd) << ',' << n << '\n';

  nlohmann::json j;
  j["config"] = cfg.echo();
  j["wallclock_seconds"] = wallclock_s;
  for (const auto& [name, value, sd, n] : rows)
    j["metrics"][name] = {{"value", value}, {"std", sd}, {"n_seeds", n}};
  auto js = open_out(cfg.out + "/" + stem + ".json");
  js << j.dump(2) << '\n';
}

void write_intervention_csv(const std::string& path, const InterventionCurve& curve) {
  auto os = open_out(path);
  os << "t,x,x_std\n";
  for (std::size_t g = 0; g < curve.mean.size(); ++g)
    os << g << ',' << fmt(curve.mean[g]) << ',' << fmt(curve.std_dev[g]) << '\n';
}

}  // namespace

void cmd_train(const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out);
  LoadedData data = load_data(cfg);

  std::vector<double> class_accs, concept_accs, train_losses, val_losses;
  for (uint64_t seed : cfg.seeds) {
    FitResult res;
    CbmModel model = train_one(cfg, data.splits, seed, &res);
    save_checkpoint(model, ckpt_path(cfg, seed), cfg.echo());
    write_train_log(cfg.out + "/train_log_seed" + std::to_string(seed) + ".csv", res);
    write_entropy_log(cfg.out + "/entropy_seed" + std::to_string(seed) + ".csv", res);
    const TestMetrics tm = test_metrics(model, data.splits.test);
    class_accs.push_back(tm.class_acc);
    concept_accs.push_back(tm.concept_acc);
    train_losses.push_back(res.log.back().train_loss);
    val_losses.push_back(res.log.back().val_loss);
    std::cout << "seed " << seed << ": class_acc " << fmt(tm.class_acc) << ", concept_acc "
              << fmt(tm.concept_acc) << '\n';
  }

  const int n = static_cast<int>(cfg.seeds.size());
  const auto ca = mean_std(class_accs);
  const auto cc = mean_std(concept_accs);
  const auto tl = mean_std(train_losses);
  const auto vl = mean_std(val_losses);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_metric_report(cfg, "summary",
                      {{"class_acc", ca.mean, ca.sd, n},
                       {"concept_acc", cc.mean, cc.sd, n},
                       {"final_train_loss", tl.mean, tl.sd, n},
                       {"final_val_loss", vl.mean, vl.sd, n}},
                      wall);
  std::cout << "summary: class_acc " << fmt(ca.mean) << " +/- " << fmt(ca.sd) << '\n';
}

void cmd_eval(const TrainConfig& cfg) {
  if (cfg.checkpoint.empty()) throw config_error("eval needs checkpoint = <path>");
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out);
  LoadedData data = load_data(cfg);
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const Dataset& test = data.splits.test;

  const TestMetrics tm = test_metrics(ck.model, test);
  const ForwardOut fo = forward_eval(ck.model, test.x_tensor());
  const double o = ois(fo.mu.data, test.n(), test.k, test.c);
  const double ni = nis(fo.mu.data, test.n(), test.k, test.c);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_metric_report(cfg, "metrics",
                      {{"class_acc", tm.class_acc, 0.0, 1},
                       {"concept_acc", tm.concept_acc, 0.0, 1},
                       {"ois_x100", 100.0 * o, 0.0, 1},
                       {"nis_x100", 100.0 * ni, 0.0, 1}},
                      wall);
  std::cout << "class_acc " << fmt(tm.class_acc) << ", concept_acc " << fmt(tm.concept_acc)
            << ", OIS " << fmt(100.0 * o) << ", NIS " << fmt(100.0 * ni) << '\n';
}

void cmd_intervene(const TrainConfig& cfg) {
  if (cfg.checkpoint.empty()) throw config_error("intervene needs checkpoint = <path>");
  fs::create_directories(cfg.out);
  LoadedData data = load_data(cfg);
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  if (ck.model.groups.empty())
    throw contract_error("intervene: checkpoint carries no concept group metadata");

  const InterventionCurve curve =
      intervention_curve(ck.model, data.splits.test, cfg.repeats, cfg.seeds.front());
  write_intervention_csv(cfg.out + "/interventions.csv", curve);

  std::vector<double> xs(curve.mean.size());
  std::iota(xs.begin(), xs.end(), 0.0);
  write_line_plot_svg(cfg.out + "/interventions.svg", "Test-time interventions", xs, curve.mean,
                      curve.std_dev, "Number of intervened groups", "TTI performance");
  std::cout << "AUC_TTI " << fmt(auc_tti(curve)) << '\n';
  std::cout << "NAUC_TTI " << fmt(nauc_tti(curve)) << '\n';
}

void cmd_leakage(const TrainConfig& cfg) {
  if (cfg.checkpoint.empty()) throw config_error("leakage needs checkpoint = <path>");
  fs::create_directories(cfg.out);
  LoadedData data = load_data(cfg);
  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const Dataset& test = data.splits.test;
  const ForwardOut fo = forward_eval(ck.model, test.x_tensor());

  auto subset_metrics = [&](const std::vector<int>& cols) {
    const int kk = static_cast<int>(cols.size());
    std::vector<double> reps(static_cast<std::size_t>(test.n()) * kk);
    std::vector<uint8_t> truth(static_cast<std::size_t>(test.n()) * kk);
    for (int i = 0; i < test.n(); ++i)
      for (int j = 0; j < kk; ++j) {
        reps[static_cast<std::size_t>(i) * kk + j] = fo.mu.at(i, cols[static_cast<std::size_t>(j)]);
        truth[static_cast<std::size_t>(i) * kk + j] =
            test.c[static_cast<std::size_t>(i) * test.k + cols[static_cast<std::size_t>(j)]];
      }
    return std::pair<double, double>{100.0 * ois(reps, test.n(), kk, truth),
                                     100.0 * nis(reps, test.n(), kk, truth)};
  };

  std::vector<int> all_cols(static_cast<std::size_t>(test.k));
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const auto [ois_complete, nis_complete] = subset_metrics(all_cols);

  // selective: ranked on the training split, as in the dropout experiments
  const auto sel_cols =
      kept_concept_columns(data.splits.train, selective_drop_groups(data.splits.train));
  const auto [ois_sel, nis_sel] = subset_metrics(sel_cols);

  std::vector<double> ois_rand, nis_rand;
  for (int r = 1; r <= 5; ++r) {
    RngStream seed_rng(cfg.seeds.front(), "leakage-rand", static_cast<uint64_t>(r));
    const auto cols = kept_concept_columns(
        data.splits.train, random_drop_groups(data.splits.train, seed_rng.next_u64()));
    const auto [o, nn] = subset_metrics(cols);
    ois_rand.push_back(o);
    nis_rand.push_back(nn);
  }
  const auto om = mean_std(ois_rand);
  const auto nm = mean_std(nis_rand);

  auto os = open_out(cfg.out + "/leakage.csv");
  os << "metric,complete,selective,random,random_std\n";
  os << "ois," << fmt(ois_complete) << ',' << fmt(ois_sel) << ',' << fmt(om.mean) << ','
     << fmt(om.sd) << '\n';
  os << "nis," << fmt(nis_complete) << ',' << fmt(nis_sel) << ',' << fmt(nm.mean) << ','
     << fmt(nm.sd) << '\n';
  std::cout << "OIS complete " << fmt(ois_complete) << ", selective " << fmt(ois_sel)
            << ", random " << fmt(om.mean) << " +/- " << fmt(om.sd) << '\n';
  std::cout << "NIS complete " << fmt(nis_complete) << ", selective " << fmt(nis_sel)
            << ", random " << fmt(nm.mean) << " +/- " << fmt(nm.sd) << '\n';
}

void cmd_corrupt_sweep(const TrainConfig& cfg) {
  fs::create_directories(cfg.out);
  const Dataset base = cfg.data == "synthetic" ? make_synthetic(cfg.synth)
                                               : load_concept_csv(cfg.data);
  for (int k : cfg.corrupt_ks)
    if (k > base.k)
      throw validation_error("corrupt_sweep: k " + std::to_string(k) + " exceeds K " +
                             std::to_string(base.k));

  // reuse path: one model per seed, trained on the uncorrupted data
  std::vector<CbmModel> reuse_models;
  SplitResult clean_splits;
  if (cfg.reuse_model) {
    clean_splits = split(base, cfg.split_train, cfg.split_val, cfg.split_test, cfg.split_seed);
    for (uint64_t seed : cfg.seeds)
      reuse_models.push_back(train_one(cfg, clean_splits, seed, nullptr));
  }

  auto os = open_out(cfg.out + "/corrupt_sweep.csv");
  os << "k,auc,auc_std,nauc,nauc_std\n";
  for (int k : cfg.corrupt_ks) {
    RngStream corrupt_rng(cfg.split_seed, "corrupt-sweep", static_cast<uint64_t>(k));
    const Dataset corrupted = corrupt_concepts(base, k, corrupt_rng.next_u64());
    const SplitResult splits =
        split(corrupted, cfg.split_train, cfg.split_val, cfg.split_test, cfg.split_seed);
    std::vector<double> aucs, naucs;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const uint64_t seed = cfg.seeds[si];
      CbmModel model = cfg.reuse_model ? reuse_models[si]
                                       : train_one(cfg, splits, seed, nullptr);
      const InterventionCurve curve = intervention_curve(model, splits.test, cfg.repeats, seed);
      aucs.push_back(auc_tti(curve));
      naucs.push_back(nauc_tti(curve));
    }
    const auto am = mean_std(aucs);
    const auto nm = mean_std(naucs);
    os << k << ',' << fmt(am.mean) << ',' << fmt(am.sd) << ',' << fmt(nm.mean) << ','
       << fmt(nm.sd) << '\n';
    std::cout << "k=" << k << ": AUC_TTI " << fmt(am.mean) << " +/- " << fmt(am.sd)
              << ", NAUC_TTI " << fmt(nm.mean) << " +/- " << fmt(nm.sd)
              << (nm.mean < 0.0 ? "  [negative NAUC: possible concept leakage]" : "") << '\n';
  }
}

void cmd_infoplane(const TrainConfig& cfg) {
  fs::create_directories(cfg.out);
  LoadedData data = load_data(cfg);
  const int stride =
      cfg.infoplane_stride > 0 ? cfg.infoplane_stride : std::max(1, cfg.epochs / 50);

  for (uint64_t seed : cfg.seeds) {
    FitResult res;
    train_one(cfg, data.splits, seed, &res, stride);
    const std::string tag = "_seed" + std::to_string(seed);

    auto os1 = open_out(cfg.out + "/infoplane_xc_cy" + tag + ".csv");
    os1 << "t,x,y\n";
    for (const auto& p : res.plane)
      os1 << p.epoch << ',' << fmt(p.i_xc) << ',' << fmt(p.i_cy) << '\n';
    auto os2 = open_out(cfg.out + "/infoplane_xz_zc" + tag + ".csv");
    os2 << "t,x,y\n";
    for (const auto& p : res.plane)
      os2 << p.epoch << ',' << fmt(p.i_xz) << ',' << fmt(p.i_zc) << '\n';

    std::vector<double> xc, cy, xz, zc, prog;
    for (const auto& p : res.plane) {
      xc.push_back(p.i_xc);
      cy.push_back(p.i_cy);
      xz.push_back(p.i_xz);
      zc.push_back(p.i_zc);
      prog.push_back(static_cast<double>(p.epoch) / std::max(1, cfg.epochs - 1));
    }
    write_scatter_svg(cfg.out + "/infoplane_xc_cy" + tag + ".svg", "Information plane", xc, cy,
                      prog, "I(X;C) [nats]", "I(C;Y) [nats]");
    write_scatter_svg(cfg.out + "/infoplane_xz_zc" + tag + ".svg", "Information plane", xz, zc,
                      prog, "I(X;Z) [nats]", "I(Z;C) [nats]");
    std::cout << "seed " << seed << ": " << res.plane.size() << " snapshots, final I(C;Y) "
              << fmt(cy.back()) << '\n';
  }
}

void cmd_gendata(const TrainConfig& cfg) {
  fs::create_directories(cfg.out);
  const std::string path = cfg.gen_out.empty() ? cfg.out + "/data.csv" : cfg.gen_out;
  const Dataset ds = make_synthetic(cfg.synth);
  write_concept_csv(ds, path);
  std::cout << "wrote " << ds.n() << " rows to " << path << '\n';
}

int run_cli(const std::vector<std::string>& args) {
  try {
    if (args.empty())
      throw config_error(
          "usage: cibm <train|eval|intervene|leakage|corrupt-sweep|infoplane|gen-data> "
          "[--config <file>] [--key value ...]");
    const std::string cmd = args[0];
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a.rfind("--", 0) != 0) throw config_error("expected --key, got '" + a + "'");
      if (i + 1 >= args.size()) throw config_error("flag '" + a + "' is missing a value");
      const std::string key = a.substr(2);
      const std::string value = args[++i];
      if (key == "config")
        config_path = value;
      else
        overrides.emplace_back(key, value);
    }
    const TrainConfig cfg = parse_config(config_path, overrides);

    if (cmd == "train")
      cmd_train(cfg);
    else if (cmd == "eval")
      cmd_eval(cfg);
    else if (cmd == "intervene")
      cmd_intervene(cfg);
    else if (cmd == "leakage")
      cmd_leakage(cfg);
    else if (cmd == "corrupt-sweep")
      cmd_corrupt_sweep(cfg);
    else if (cmd == "infoplane")
      cmd_infoplane(cfg);
    else if (cmd == "gen-data")
      cmd_gendata(cfg);
    else
      throw config_error("unknown command '" + cmd + "'");
    return 0;
  } catch (const train_error& e) {
    std::cerr << "error: " << e.what() << " (epoch " << e.epoch << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cibm
