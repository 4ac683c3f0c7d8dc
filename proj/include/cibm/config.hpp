#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cibm/data.hpp"
#include "cibm/model.hpp"

namespace cibm {

// Flat key = value experiment configuration. Unknown keys are errors; CLI
// flags override file values; CIBM_OUT overrides the output directory.
struct TrainConfig {
  // dataset source: "synthetic" or a concept-CSV path
  std::string data = "synthetic";
  SynthSpec synth;
  double split_train = 0.6, split_val = 0.2, split_test = 0.2;
  uint64_t split_seed = 101;

  std::vector<int> hidden{64, 64};
  std::string concept_mode = "soft";
  std::string regime = "joint";
  std::string loss = "vanilla";
  double beta = 0.5;
  double lambda_concept = 1.0;
  double w_entropy = -1.0;  // < 0 selects the (1 - beta) default
  int mi_samples = 64;
  int epochs = 100;
  int batch = 128;
  double lr = 0.003;
  double wd = 0.001;
  double grad_clip = 0.0;  // 0 disables clipping
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  int repeats = 5;
  int infoplane_stride = 0;  // 0 selects max(1, epochs / 50)
  int infoplane_rows = 768;
  std::string out = "out";
  std::vector<int> corrupt_ks{0, 4, 8, 16};
  bool reuse_model = false;
  std::string checkpoint;
  std::string gen_out;  // gen-data target; defaults to <out>/data.csv

  ConceptMode mode_enum() const;
  TrainRegime regime_enum() const;
  LossVariant loss_enum() const;
  FitConfig fit_config(uint64_t seed) const;

  // serialization that parse_config round-trips exactly
  std::string echo() const;
};

// Applies one key/value pair; throws config_error naming the key on unknown
// keys, type mismatches and range violations.
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);

TrainConfig parse_config_file(const std::string& path);

// file (optional) first, then overrides in order, then CIBM_OUT
TrainConfig parse_config(const std::string& file_path,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace cibm
