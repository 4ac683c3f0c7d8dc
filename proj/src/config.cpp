#include "cibm/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cibm/errors.hpp"

namespace cibm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw config_error("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw config_error("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw config_error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(trim(tok));
  return out;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw config_error("config key '" + key + "': " + why);
}

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ConceptMode TrainConfig::mode_enum() const {
  return concept_mode == "hard" ? ConceptMode::hard : ConceptMode::soft;
}

TrainRegime TrainConfig::regime_enum() const {
  if (regime == "joint") return TrainRegime::joint;
  if (regime == "independent") return TrainRegime::independent;
  return TrainRegime::sequential;
}

LossVariant TrainConfig::loss_enum() const {
  if (loss == "vanilla") return LossVariant::vanilla;
  if (loss == "ib_b") return LossVariant::ib_b;
  return LossVariant::ib_e;
}

FitConfig TrainConfig::fit_config(uint64_t seed) const {
  FitConfig fc;
  fc.regime = regime_enum();
  fc.variant = loss_enum();
  fc.beta = beta;
  fc.lambda_concept = lambda_concept;
  fc.w_entropy = w_entropy;
  fc.mi_samples = mi_samples;
  fc.epochs = epochs;
  fc.batch = batch;
  fc.adam.lr = lr;
  fc.adam.wd = wd;
  fc.adam.clip_norm = grad_clip;
  fc.seed = seed;
  fc.infoplane_stride = 0;
  fc.infoplane_rows = infoplane_rows;
  return fc;
}

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "data") {
    require(!v.empty(), key, "must not be empty");
    cfg.data = v;
  } else if (key == "synth_n") {
    cfg.synth.n = static_cast<int>(to_int(key, v));
    require(cfg.synth.n > 0, key, "must be > 0");
  } else if (key == "synth_d") {
    cfg.synth.d = static_cast<int>(to_int(key, v));
    require(cfg.synth.d > 0, key, "must be > 0");
  } else if (key == "synth_k") {
    cfg.synth.k = static_cast<int>(to_int(key, v));
    require(cfg.synth.k > 0, key, "must be > 0");
  } else if (key == "synth_g") {
    cfg.synth.g = static_cast<int>(to_int(key, v));
    require(cfg.synth.g > 0, key, "must be > 0");
  } else if (key == "synth_kc") {
    cfg.synth.kc = static_cast<int>(to_int(key, v));
    require(cfg.synth.kc > 0, key, "must be > 0");
  } else if (key == "synth_p_flip") {
    cfg.synth.p_flip = to_double(key, v);
    require(cfg.synth.p_flip >= 0.0 && cfg.synth.p_flip < 0.5, key, "must be in [0, 0.5)");
  } else if (key == "synth_leak") {
    cfg.synth.leak = to_double(key, v);
    require(cfg.synth.leak >= 0.0, key, "must be >= 0");
  } else if (key == "synth_noise") {
    cfg.synth.x_noise = to_double(key, v);
    require(cfg.synth.x_noise > 0.0, key, "must be > 0");
  } else if (key == "synth_seed") {
    cfg.synth.seed = static_cast<uint64_t>(to_int(key, v));
  } else if (key == "split") {
    const auto parts = split_list(v);
    require(parts.size() == 3, key, "expected three comma-separated fractions");
    cfg.split_train = to_double(key, parts[0]);
    cfg.split_val = to_double(key, parts[1]);
    cfg.split_test = to_double(key, parts[2]);
  } else if (key == "split_seed") {
    cfg.split_seed = static_cast<uint64_t>(to_int(key, v));
  } else if (key == "hidden") {
    cfg.hidden.clear();
    if (v != "-") {
      for (const auto& tok : split_list(v)) {
        const int h = static_cast<int>(to_int(key, tok));
        require(h > 0, key, "hidden sizes must be > 0");
        cfg.hidden.push_back(h);
      }
    }
  } else if (key == "concept_mode") {
    require(v == "soft" || v == "hard", key, "must be soft or hard");
    cfg.concept_mode = v;
  } else if (key == "regime") {
    require(v == "joint" || v == "independent" || v == "sequential", key,
            "must be joint, independent or sequential");
    cfg.regime = v;
  } else if (key == "loss") {
    require(v == "vanilla" || v == "ib_b" || v == "ib_e", key,
            "must be vanilla, ib_b or ib_e");
    cfg.loss = v;
  } else if (key == "beta") {
    cfg.beta = to_double(key, v);
    require(cfg.beta >= 0.0 && cfg.beta < 1.0, key, "must be in [0, 1)");
  } else if (key == "lambda_concept") {
    cfg.lambda_concept = to_double(key, v);
    require(cfg.lambda_concept > 0.0, key, "must be > 0");
  } else if (key == "w_entropy") {
    cfg.w_entropy = to_double(key, v);
    require(cfg.w_entropy >= 0.0 || cfg.w_entropy == -1.0, key, "must be >= 0 (or -1 for auto)");
  } else if (key == "mi_samples") {
    cfg.mi_samples = static_cast<int>(to_int(key, v));
    require(cfg.mi_samples >= 2, key, "must be >= 2");
  } else if (key == "epochs") {
    cfg.epochs = static_cast<int>(to_int(key, v));
    require(cfg.epochs > 0, key, "must be > 0");
  } else if (key == "batch") {
    cfg.batch = static_cast<int>(to_int(key, v));
    require(cfg.batch > 0, key, "must be > 0");
  } else if (key == "lr") {
    cfg.lr = to_double(key, v);
    require(cfg.lr > 0.0, key, "must be > 0");
  } else if (key == "wd") {
    cfg.wd = to_double(key, v);
    require(cfg.wd >= 0.0, key, "must be >= 0");
  } else if (key == "grad_clip") {
    cfg.grad_clip = to_double(key, v);
    require(cfg.grad_clip >= 0.0, key, "must be >= 0");
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& tok : split_list(v))
      cfg.seeds.push_back(static_cast<uint64_t>(to_int(key, tok)));
    require(!cfg.seeds.empty(), key, "must not be empty");
  } else if (key == "repeats") {
    cfg.repeats = static_cast<int>(to_int(key, v));
    require(cfg.repeats >= 1, key, "must be >= 1");
  } else if (key == "infoplane_stride") {
    cfg.infoplane_stride = static_cast<int>(to_int(key, v));
    require(cfg.infoplane_stride >= 0, key, "must be >= 0");
  } else if (key == "infoplane_rows") {
    cfg.infoplane_rows = static_cast<int>(to_int(key, v));
    require(cfg.infoplane_rows >= 16, key, "must be >= 16");
  } else if (key == "out") {
    require(!v.empty(), key, "must not be empty");
    cfg.out = v;
  } else if (key == "corrupt_ks") {
    cfg.corrupt_ks.clear();
    for (const auto& tok : split_list(v)) {
      const int kk = static_cast<int>(to_int(key, tok));
      require(kk >= 0, key, "corruption counts must be >= 0");
      cfg.corrupt_ks.push_back(kk);
    }
    require(!cfg.corrupt_ks.empty(), key, "must not be empty");
  } else if (key == "reuse_model") {
    cfg.reuse_model = to_bool(key, v);
  } else if (key == "checkpoint") {
    cfg.checkpoint = v;
  } else if (key == "gen_out") {
    cfg.gen_out = v;
  } else {
    throw config_error("unknown config key '" + key + "'");
  }
}

TrainConfig parse_config_file(const std::string& path) {
  return parse_config(path, {});
}

TrainConfig parse_config(const std::string& file_path,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  TrainConfig cfg;
  if (!file_path.empty()) {
    std::ifstream in(file_path);
    if (!in) throw config_error("cannot open config file " + file_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
      apply_config_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : overrides) apply_config_kv(cfg, key, value);
  if (const char* env_out = std::getenv("CIBM_OUT"); env_out && *env_out) cfg.out = env_out;
  return cfg;
}

std::string TrainConfig::echo() const {
  std::ostringstream os;
  os << "data = " << data << '\n';
  os << "synth_n = " << synth.n << '\n';
  os << "synth_d = " << synth.d << '\n';
  os << "synth_k = " << synth.k << '\n';
  os << "synth_g = " << synth.g << '\n';
  os << "synth_kc = " << synth.kc << '\n';
  os << "synth_p_flip = " << fmt_double(synth.p_flip) << '\n';
  os << "synth_leak = " << fmt_double(synth.leak) << '\n';
  os << "synth_noise = " << fmt_double(synth.x_noise) << '\n';
  os << "synth_seed = " << synth.seed << '\n';
  os << "split = " << fmt_double(split_train) << ',' << fmt_double(split_val) << ','
     << fmt_double(split_test) << '\n';
  os << "split_seed = " << split_seed << '\n';
  os << "hidden = ";
  if (hidden.empty()) {
    os << '-';
  } else {
    for (std::size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
  }
  os << '\n';
  os << "concept_mode = " << concept_mode << '\n';
  os << "regime = " << regime << '\n';
  os << "loss = " << loss << '\n';
  os << "beta = " << fmt_double(beta) << '\n';
  os << "lambda_concept = " << fmt_double(lambda_concept) << '\n';
  os << "w_entropy = " << fmt_double(w_entropy) << '\n';
  os << "mi_samples = " << mi_samples << '\n';
  os << "epochs = " << epochs << '\n';
  os << "batch = " << batch << '\n';
  os << "lr = " << fmt_double(lr) << '\n';
  os << "wd = " << fmt_double(wd) << '\n';
  os << "grad_clip = " << fmt_double(grad_clip) << '\n';
  os << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << '\n';
  os << "repeats = " << repeats << '\n';
  os << "infoplane_stride = " << infoplane_stride << '\n';
  os << "infoplane_rows = " << infoplane_rows << '\n';
  os << "out = " << out << '\n';
  os << "corrupt_ks = ";
  for (std::size_t i = 0; i < corrupt_ks.size(); ++i) os << (i ? "," : "") << corrupt_ks[i];
  os << '\n';
  os << "reuse_model = " << (reuse_model ? "true" : "false") << '\n';
  if (!checkpoint.empty()) os << "checkpoint = " << checkpoint << '\n';
  if (!gen_out.empty()) os << "gen_out = " << gen_out << '\n';
  return os.str();
}

}  // namespace cibm
