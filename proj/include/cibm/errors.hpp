#pragma once

#include <stdexcept>
#include <string>

namespace cibm {

// Shape disagreement between tensors that must conform.
struct dim_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad argument values (non-binary targets, out-of-range labels, ...).
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad configuration: unknown key, type mismatch, range violation.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File ingestion failure; message carries the offending line number.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training diverged; carries the epoch at which the loss went non-finite.
struct train_error : std::runtime_error {
  int epoch;
  train_error(const std::string& what, int epoch_idx)
      : std::runtime_error(what), epoch(epoch_idx) {}
};

// API misuse: calling an operation whose preconditions the program controls.
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Metric has no defined value on the given inputs (e.g. single-class AUC).
struct undefined_metric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cibm
