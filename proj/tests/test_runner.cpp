#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cibm/config.hpp"
#include "cibm/errors.hpp"
#include "cibm/metrics.hpp"
#include "cibm/runner.hpp"

using namespace cibm;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
}

// small, fast experiment setup shared by the command tests
std::vector<std::pair<std::string, std::string>> small_overrides(const std::string& out) {
  return {{"synth_n", "320"}, {"synth_d", "8"},  {"synth_k", "8"},  {"synth_g", "4"},
          {"synth_kc", "4"},  {"hidden", "16"},  {"epochs", "4"},   {"batch", "64"},
          {"seeds", "1"},     {"repeats", "3"},  {"out", out}};
}

struct EnvGuard {
  EnvGuard() { unsetenv("CIBM_OUT"); }
};

}  // namespace

TEST_CASE("config defaults follow the documented training recipe") {
  EnvGuard guard;
  fs::create_directories("runner_test");
  write_file("runner_test/empty.conf", "");
  const TrainConfig cfg = parse_config_file("runner_test/empty.conf");
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.epochs == 100);
  CHECK(cfg.batch == 128);
  CHECK(cfg.mi_samples == 64);
  CHECK(cfg.lr == 0.003);
  CHECK(cfg.wd == 0.001);
  CHECK(cfg.grad_clip == 0.0);
  CHECK(cfg.seeds.size() == 5);
  CHECK(cfg.repeats == 5);
}

TEST_CASE("config rejects bad keys, types and ranges") {
  EnvGuard guard;
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(apply_config_kv(cfg, "beta", "1.5"), doctest::Contains("beta"),
                       config_error);
  CHECK_THROWS_WITH_AS(apply_config_kv(cfg, "betaa", "0.5"), doctest::Contains("betaa"),
                       config_error);
  CHECK_THROWS_WITH_AS(apply_config_kv(cfg, "epochs", "ten"), doctest::Contains("epochs"),
                       config_error);
  CHECK_THROWS_AS(apply_config_kv(cfg, "loss", "l2"), config_error);
  CHECK_THROWS_AS(apply_config_kv(cfg, "mi_samples", "1"), config_error);
}

TEST_CASE("flags override the config file") {
  EnvGuard guard;
  fs::create_directories("runner_test");
  write_file("runner_test/beta.conf", "beta = 0.5\nepochs = 7\n");
  const TrainConfig cfg = parse_config("runner_test/beta.conf", {{"beta", "0.25"}});
  CHECK(cfg.beta == 0.25);
  CHECK(cfg.epochs == 7);
}

TEST_CASE("CIBM_OUT overrides the output directory") {
  fs::create_directories("runner_test");
  write_file("runner_test/out.conf", "out = filedir\n");
  setenv("CIBM_OUT", "envdir", 1);
  const TrainConfig cfg = parse_config_file("runner_test/out.conf");
  unsetenv("CIBM_OUT");
  CHECK(cfg.out == "envdir");
}

TEST_CASE("config echo round-trips") {
  EnvGuard guard;
  TrainConfig cfg;
  apply_config_kv(cfg, "loss", "ib_e");
  apply_config_kv(cfg, "beta", "0.25");
  apply_config_kv(cfg, "seeds", "3,5,9");
  apply_config_kv(cfg, "hidden", "24,12");
  apply_config_kv(cfg, "split", "0.5,0.25,0.25");
  apply_config_kv(cfg, "reuse_model", "true");

  fs::create_directories("runner_test");
  write_file("runner_test/echo.conf", cfg.echo());
  const TrainConfig back = parse_config_file("runner_test/echo.conf");
  CHECK(back.echo() == cfg.echo());
}

TEST_CASE("gen-data writes deterministic loadable files") {
  EnvGuard guard;
  const std::string out = "runner_test/gen";
  auto ov = small_overrides(out);
  ov.emplace_back("gen_out", out + "/data.csv");
  std::vector<std::string> args{"gen-data"};
  for (const auto& [k, v] : ov) {
    args.push_back("--" + k);
    args.push_back(v);
  }
  REQUIRE(run_cli(args) == 0);
  const std::string first = read_file(out + "/data.csv");
  REQUIRE(run_cli(args) == 0);
  CHECK(read_file(out + "/data.csv") == first);
  CHECK(count_lines(first) == 320 + 1);

  const Dataset loaded = load_concept_csv(out + "/data.csv");
  SynthSpec spec;
  spec.n = 320;
  spec.d = 8;
  spec.k = 8;
  spec.g = 4;
  spec.kc = 4;
  const Dataset mem = make_synthetic(spec);
  CHECK(loaded.x == mem.x);
  CHECK(loaded.c == mem.c);
  CHECK(loaded.y == mem.y);
  CHECK(loaded.groups == mem.groups);
}

TEST_CASE("train writes logs, checkpoints and an aggregated summary") {
  EnvGuard guard;
  const std::string out = "runner_test/train";
  auto ov = small_overrides(out);
  ov[8].second = "1,2";  // seeds
  TrainConfig cfg;
  for (const auto& [k, v] : ov) apply_config_kv(cfg, k, v);
  cmd_train(cfg);

  const std::string log1 = read_file(out + "/train_log_seed1.csv");
  CHECK(log1.rfind("epoch,train_loss,val_loss,concept_acc,class_acc\n", 0) == 0);
  CHECK(count_lines(log1) == 4 + 1);
  CHECK(read_file(out + "/entropy_seed1.csv").rfind("t,H\n", 0) == 0);

  const std::string summary = read_file(out + "/summary.csv");
  CHECK(summary.rfind("name,value,std,n_seeds\n", 0) == 0);
  CHECK(summary.find("class_acc") != std::string::npos);
  CHECK(summary.find(",2\n") != std::string::npos);  // two seeds aggregated

  // the checkpoint's config echo reparses to the same configuration
  const Checkpoint ck = load_checkpoint(out + "/checkpoint_seed1.txt");
  fs::create_directories("runner_test");
  write_file("runner_test/ck_echo.conf", ck.config_echo);
  const TrainConfig back = parse_config_file("runner_test/ck_echo.conf");
  CHECK(back.echo() == cfg.echo());
}

TEST_CASE("identical config and seeds produce byte-identical outputs") {
  EnvGuard guard;
  TrainConfig a, b;
  for (const auto& [k, v] : small_overrides("runner_test/det_a")) apply_config_kv(a, k, v);
  for (const auto& [k, v] : small_overrides("runner_test/det_b")) apply_config_kv(b, k, v);
  cmd_train(a);
  cmd_train(b);
  CHECK(read_file("runner_test/det_a/train_log_seed1.csv") ==
        read_file("runner_test/det_b/train_log_seed1.csv"));
  CHECK(read_file("runner_test/det_a/entropy_seed1.csv") ==
        read_file("runner_test/det_b/entropy_seed1.csv"));
  CHECK(read_file("runner_test/det_a/summary.csv") == read_file("runner_test/det_b/summary.csv"));
}

TEST_CASE("intervene emits the paper curve layout and consistent AUC") {
  EnvGuard guard;
  const std::string out = "runner_test/intervene";
  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  cmd_train(cfg);
  apply_config_kv(cfg, "checkpoint", out + "/checkpoint_seed1.txt");
  cmd_intervene(cfg);

  const std::string csv = read_file(out + "/interventions.csv");
  CHECK(csv.rfind("t,x,x_std\n", 0) == 0);
  CHECK(count_lines(csv) == 4 + 1 + 1);  // header + G+1 points

  // recompute the printed AUC from the CSV rows
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::vector<double> xs;
  while (std::getline(is, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    xs.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
  }
  const double auc_from_csv = auc_tti(xs);

  const Checkpoint ck = load_checkpoint(cfg.checkpoint);
  const Dataset full = make_synthetic(cfg.synth);
  const SplitResult parts = split(full, 0.6, 0.2, 0.2, cfg.split_seed);
  const InterventionCurve curve =
      intervention_curve(ck.model, parts.test, cfg.repeats, cfg.seeds.front());
  CHECK(auc_from_csv == doctest::Approx(auc_tti(curve)).epsilon(1e-9));
  CHECK(fs::exists(out + "/interventions.svg"));
}

TEST_CASE("leakage emits three settings with std only for random dropout") {
  EnvGuard guard;
  const std::string out = "runner_test/leakage";
  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  apply_config_kv(cfg, "epochs", "25");  // leakage directions need a trained model
  apply_config_kv(cfg, "synth_n", "768");
  cmd_train(cfg);
  apply_config_kv(cfg, "checkpoint", out + "/checkpoint_seed1.txt");
  cmd_leakage(cfg);

  const std::string csv = read_file(out + "/leakage.csv");
  CHECK(csv.rfind("metric,complete,selective,random,random_std\n", 0) == 0);
  CHECK(count_lines(csv) == 3);

  // removing concepts increases impurity: random-dropout OIS >= complete OIS
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  REQUIRE(line.rfind("ois,", 0) == 0);
  std::vector<double> cells;
  std::istringstream ls(line.substr(4));
  std::string tok;
  while (std::getline(ls, tok, ',')) cells.push_back(std::stod(tok));
  REQUIRE(cells.size() == 4);
  CHECK(cells[2] >= cells[0]);  // random >= complete
}

TEST_CASE("eval reports metrics for a checkpoint") {
  EnvGuard guard;
  const std::string out = "runner_test/eval";
  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  cmd_train(cfg);
  apply_config_kv(cfg, "checkpoint", out + "/checkpoint_seed1.txt");
  cmd_eval(cfg);

  const std::string csv = read_file(out + "/metrics.csv");
  CHECK(csv.rfind("name,value,std,n_seeds\n", 0) == 0);
  for (const char* name : {"class_acc", "concept_acc", "ois_x100", "nis_x100"})
    CHECK(csv.find(name) != std::string::npos);
  const std::string json = read_file(out + "/metrics.json");
  CHECK(json.find("\"metrics\"") != std::string::npos);
  CHECK(json.find("\"config\"") != std::string::npos);

  CHECK_THROWS_AS(cmd_eval(parse_config("", {{"out", out}})), config_error);  // no checkpoint
}

TEST_CASE("training runs from a CSV dataset source") {
  EnvGuard guard;
  const std::string out = "runner_test/csvtrain";
  auto ov = small_overrides(out);
  ov.emplace_back("gen_out", out + "/data.csv");
  TrainConfig gen;
  for (const auto& [k, v] : ov) apply_config_kv(gen, k, v);
  cmd_gendata(gen);

  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  apply_config_kv(cfg, "data", out + "/data.csv");
  cmd_train(cfg);
  CHECK(read_file(out + "/summary.csv").find("class_acc") != std::string::npos);

  // the synthetic equivalent trains to the same numbers: the CSV round trip
  // is value-exact and the split is seeded
  TrainConfig synth_cfg;
  for (const auto& [k, v] : small_overrides("runner_test/csvtrain_ref")) apply_config_kv(synth_cfg, k, v);
  cmd_train(synth_cfg);
  CHECK(read_file(out + "/train_log_seed1.csv") ==
        read_file("runner_test/csvtrain_ref/train_log_seed1.csv"));
}

TEST_CASE("the documented beta grid parses") {
  EnvGuard guard;
  for (const char* b : {"0.1", "0.2", "0.25", "0.5", "0.75", "0.9"}) {
    TrainConfig cfg;
    apply_config_kv(cfg, "beta", b);
    CHECK(cfg.beta == std::stod(b));
  }
}

TEST_CASE("corrupt sweep at k = 0 matches the clean intervention AUC") {
  EnvGuard guard;
  const std::string out = "runner_test/sweep";
  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  apply_config_kv(cfg, "corrupt_ks", "0,4");
  cmd_train(cfg);
  cmd_corrupt_sweep(cfg);

  const std::string csv = read_file(out + "/corrupt_sweep.csv");
  CHECK(csv.rfind("k,auc,auc_std,nauc,nauc_std\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 2);

  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);  // k = 0 row
  const auto c1 = line.find(',');
  const auto c2 = line.find(',', c1 + 1);
  const double auc_k0 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));

  const Checkpoint ck = load_checkpoint(out + "/checkpoint_seed1.txt");
  const Dataset full = make_synthetic(cfg.synth);
  const SplitResult parts = split(full, 0.6, 0.2, 0.2, cfg.split_seed);
  const InterventionCurve curve =
      intervention_curve(ck.model, parts.test, cfg.repeats, cfg.seeds.front());
  CHECK(auc_k0 == doctest::Approx(auc_tti(curve)).epsilon(1e-9));
}

TEST_CASE("infoplane snapshot cadence and layout") {
  EnvGuard guard;
  const std::string out = "runner_test/plane";
  TrainConfig cfg;
  for (const auto& [k, v] : small_overrides(out)) apply_config_kv(cfg, k, v);
  apply_config_kv(cfg, "epochs", "6");
  apply_config_kv(cfg, "infoplane_stride", "2");
  apply_config_kv(cfg, "infoplane_rows", "64");
  cmd_infoplane(cfg);

  const std::string csv = read_file(out + "/infoplane_xc_cy_seed1.csv");
  CHECK(csv.rfind("t,x,y\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + (6 + 2 - 1) / 2);  // ceil(epochs / stride)
  CHECK(fs::exists(out + "/infoplane_xz_zc_seed1.csv"));
  CHECK(fs::exists(out + "/infoplane_xc_cy_seed1.svg"));
}

TEST_CASE("cli exit codes") {
  EnvGuard guard;
  CHECK(run_cli({"bogus"}) == 1);
  CHECK(run_cli({"train", "--no-value"}) == 1);
  CHECK(run_cli({"train", "--beta", "2.0"}) == 1);
  CHECK(run_cli({"intervene", "--checkpoint", "missing.txt"}) == 1);

  auto ov = small_overrides("runner_test/cli");
  std::vector<std::string> args{"gen-data"};
  for (const auto& [k, v] : ov) {
    args.push_back("--" + k);
    args.push_back(v);
  }
  CHECK(run_cli(args) == 0);
}
