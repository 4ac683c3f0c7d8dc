#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cibm/tensor.hpp"

namespace cibm {

// Inputs X, binary concept annotations C with group structure, labels Y.
struct Dataset {
  int d = 0;   // input dims
  int k = 0;   // concepts
  int kc = 0;  // classes
  std::vector<double> x;   // n x d, row-major
  std::vector<uint8_t> c;  // n x k
  std::vector<int> y;      // n
  std::vector<std::vector<int>> groups;  // partition of {0..k-1}
  std::string split_tag;

  int n() const { return static_cast<int>(y.size()); }
  const double* x_row(int i) const { return x.data() + static_cast<std::size_t>(i) * d; }
  const uint8_t* c_row(int i) const { return c.data() + static_cast<std::size_t>(i) * k; }
  Tensor x_tensor() const;        // [n x d]
  Tensor c_tensor() const;        // [n x k], values 0/1
  void validate() const;          // checks the invariants above
};

struct SynthSpec {
  int n = 4096;
  int d = 32;
  int k = 16;
  int g = 4;
  int kc = 8;
  double p_flip = 0.05;      // per-bit concept flip noise, < 0.5
  double leak = 1.0;         // strength of the class-dependent X channel bypassing C
  double x_noise = 0.1;      // observation noise sigma, > 0
  uint64_t seed = 7;
};

// Generative process: y ~ U(Kc); c = class template row with bits flipped at
// p_flip; x = A c + leak * B onehot(y) + x_noise * eta. leak > 0 opens a path
// X -> Y that bypasses C, which is what induces measurable concept leakage.
Dataset make_synthetic(const SynthSpec& spec);

// CSV with header x_0..x_{D-1},c_0..c_{K-1},y plus a sidecar <base>.groups
// (one comma-separated list of c_* names per line; singleton groups when the
// sidecar is absent).
Dataset load_concept_csv(const std::string& path);
void write_concept_csv(const Dataset& ds, const std::string& path);

// k concept columns chosen without replacement become Bernoulli(0.5) noise;
// groups, X and Y are untouched.
Dataset corrupt_concepts(const Dataset& ds, int k, uint64_t seed);

// Group ids ranked most informative about Y first (plug-in MI on a training
// subsample of at most `subsample` rows); ties keep the lowest index last.
std::vector<int> selective_drop_groups(const Dataset& ds, int subsample = 2048);
std::vector<int> random_drop_groups(const Dataset& ds, uint64_t seed);

// Removes the given groups and renumbers the remaining concepts.
Dataset drop_groups(const Dataset& ds, const std::vector<int>& group_ids);

// Drops the floor(G/2) groups with the highest estimated E[I(Y;C_i)].
Dataset selective_dropout(const Dataset& ds);
// Drops floor(G/2) groups chosen uniformly at random.
Dataset random_dropout(const Dataset& ds, uint64_t seed);

// Concept columns that survive when `dropped` groups are removed.
std::vector<int> kept_concept_columns(const Dataset& ds, const std::vector<int>& dropped);

// Class-stratified disjoint partition; fractions must sum to 1.
struct SplitResult {
  Dataset train, val, test;
};
SplitResult split(const Dataset& ds, double f_train, double f_val, double f_test,
                  uint64_t seed);

}  // namespace cibm
