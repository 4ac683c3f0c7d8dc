#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cibm/data.hpp"
#include "cibm/errors.hpp"
#include "cibm/info.hpp"
#include "cibm/probe.hpp"
#include "cibm/rng.hpp"

using namespace cibm;

namespace {

Dataset tiny_grouped_dataset() {
  Dataset ds;
  ds.d = 2;
  ds.k = 4;
  ds.kc = 2;
  RngStream rng(5, "tiny");
  for (int i = 0; i < 200; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    ds.y.push_back(y);
    // group 0 (c0,c1) depends on y, group 1 (c2,c3) is noise
    ds.c.push_back(static_cast<uint8_t>(y));
    ds.c.push_back(static_cast<uint8_t>(y));
    ds.c.push_back(rng.bernoulli(0.5) ? 1 : 0);
    ds.c.push_back(rng.bernoulli(0.5) ? 1 : 0);
    ds.x.push_back(rng.normal());
    ds.x.push_back(rng.normal());
  }
  ds.groups = {{0, 1}, {2, 3}};
  ds.validate();
  return ds;
}

}  // namespace

TEST_CASE("make_synthetic validates its spec") {
  SynthSpec bad;
  bad.p_flip = 0.5;
  CHECK_THROWS_AS(make_synthetic(bad), validation_error);

  SynthSpec odd;
  odd.k = 10;
  odd.g = 4;  // not divisible
  CHECK_THROWS_AS(make_synthetic(odd), validation_error);
}

TEST_CASE("make_synthetic noiseless limit makes concepts a function of the class") {
  SynthSpec spec;
  spec.n = 512;
  spec.d = 8;
  spec.k = 8;
  spec.g = 4;
  spec.kc = 4;
  spec.p_flip = 0.0;
  spec.leak = 0.0;
  spec.x_noise = 1e-9;
  spec.seed = 3;
  const Dataset ds = make_synthetic(spec);

  std::map<int, std::vector<uint8_t>> tmpl;
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<uint8_t> row(ds.c_row(i), ds.c_row(i) + ds.k);
    auto [it, fresh] = tmpl.emplace(ds.y[static_cast<std::size_t>(i)], row);
    if (!fresh) CHECK(it->second == row);
  }
  // distinct templates for this seed: the class is decodable from C alone
  std::set<std::vector<uint8_t>> uniq;
  for (const auto& [y, row] : tmpl) uniq.insert(row);
  CHECK(uniq.size() == tmpl.size());
}

TEST_CASE("make_synthetic is reproducible") {
  SynthSpec spec;
  spec.n = 256;
  const Dataset a = make_synthetic(spec);
  const Dataset b = make_synthetic(spec);
  CHECK(a.x == b.x);
  CHECK(a.c == b.c);
  CHECK(a.y == b.y);
  CHECK(a.groups == b.groups);
}

TEST_CASE("leakage channel: probe from X beats probe from true C") {
  SynthSpec spec;  // the documented reference spec
  spec.n = 4096;
  spec.d = 32;
  spec.k = 16;
  spec.g = 4;
  spec.kc = 8;
  spec.p_flip = 0.05;
  spec.leak = 1.0;
  spec.x_noise = 0.1;
  spec.seed = 7;
  const Dataset ds = make_synthetic(spec);
  const SplitResult parts = split(ds, 0.7, 0.0, 0.3, 11);

  std::vector<double> c_train(parts.train.c.begin(), parts.train.c.end());
  std::vector<double> c_test(parts.test.c.begin(), parts.test.c.end());
  const auto probe_x =
      train_softmax_probe(parts.train.x, parts.train.n(), ds.d, parts.train.y, ds.kc);
  const auto probe_c = train_softmax_probe(c_train, parts.train.n(), ds.k, parts.train.y, ds.kc);
  const double acc_x = softmax_probe_accuracy(probe_x, parts.test.x, parts.test.n(), parts.test.y);
  const double acc_c = softmax_probe_accuracy(probe_c, c_test, parts.test.n(), parts.test.y);
  CHECK(acc_x > acc_c);
}

TEST_CASE("csv ingestion with groups sidecar") {
  const std::string dir = "csv_test_dir";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/hand.csv";
  {
    std::ofstream os(path, std::ios::binary);
    os << "x_0,x_1,c_0,c_1,y\n";
    os << "0.5,-1.25,1,0,0\n";
    os << "1.5,2,0,0,1\n";
    os << "-3,0.125,1,1,1\n";
  }
  {
    std::ofstream os(dir + "/hand.groups", std::ios::binary);
    os << "c_0,c_1\n";
  }
  const Dataset ds = load_concept_csv(path);
  CHECK(ds.n() == 3);
  CHECK(ds.d == 2);
  CHECK(ds.k == 2);
  CHECK(ds.kc == 2);
  CHECK(ds.x[0] == 0.5);
  CHECK(ds.x[1] == -1.25);
  CHECK(ds.c[0] == 1);
  CHECK(ds.y[2] == 1);
  CHECK(ds.groups.size() == 1);

  // round trip is value-identical
  const std::string copy = dir + "/copy.csv";
  write_concept_csv(ds, copy);
  const Dataset ds2 = load_concept_csv(copy);
  CHECK(ds.x == ds2.x);
  CHECK(ds.c == ds2.c);
  CHECK(ds.y == ds2.y);
  CHECK(ds.groups == ds2.groups);
}

TEST_CASE("csv ingestion errors name the line") {
  const std::string dir = "csv_test_dir";
  std::filesystem::create_directories(dir);

  {
    std::ofstream os(dir + "/badc.csv", std::ios::binary);
    os << "x_0,c_0,y\n0.5,0.7,0\n";
  }
  CHECK_THROWS_WITH_AS(load_concept_csv(dir + "/badc.csv"), doctest::Contains("line 2"),
                       data_error);

  {
    std::ofstream os(dir + "/short.csv", std::ios::binary);
    os << "x_0,c_0,y\n0.5,1,0\n0.5,1\n";
  }
  CHECK_THROWS_WITH_AS(load_concept_csv(dir + "/short.csv"), doctest::Contains("line 3"),
                       data_error);

  {
    std::ofstream os(dir + "/g.csv", std::ios::binary);
    os << "x_0,c_0,y\n0.5,1,0\n";
    std::ofstream gs(dir + "/g.groups", std::ios::binary);
    gs << "c_0,c_9\n";
  }
  CHECK_THROWS_WITH_AS(load_concept_csv(dir + "/g.csv"), doctest::Contains("c_9"), data_error);

  // missing sidecar defaults to singleton groups
  {
    std::ofstream os(dir + "/nog.csv", std::ios::binary);
    os << "x_0,c_0,c_1,y\n0.5,1,0,0\n1.5,0,1,1\n";
  }
  const Dataset ds = load_concept_csv(dir + "/nog.csv");
  CHECK(ds.groups.size() == 2);
  CHECK(ds.groups[0] == std::vector<int>{0});
}

TEST_CASE("corrupt_concepts replaces exactly k columns with fair noise") {
  SynthSpec spec;
  spec.n = 512;
  spec.k = 16;
  spec.g = 4;
  const Dataset ds = make_synthetic(spec);

  CHECK_THROWS_AS(corrupt_concepts(ds, ds.k + 1, 1), validation_error);

  const Dataset same = corrupt_concepts(ds, 0, 1);
  CHECK(same.c == ds.c);
  CHECK(same.x == ds.x);

  const Dataset noisy = corrupt_concepts(ds, ds.k, 1);
  CHECK(noisy.x == ds.x);
  CHECK(noisy.y == ds.y);
  CHECK(noisy.groups == ds.groups);
  for (int j = 0; j < ds.k; ++j) {
    double mean = 0.0;
    for (int i = 0; i < ds.n(); ++i) mean += noisy.c[static_cast<std::size_t>(i) * ds.k + j];
    mean /= ds.n();
    // binomial 3-sigma band around 0.5 at n=512
    CHECK(std::abs(mean - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(ds.n())));
  }

  const int kk = 4;
  const Dataset part = corrupt_concepts(ds, kk, 9);
  int changed_cols = 0;
  for (int j = 0; j < ds.k; ++j) {
    bool diff = false;
    for (int i = 0; i < ds.n(); ++i)
      if (part.c[static_cast<std::size_t>(i) * ds.k + j] !=
          ds.c[static_cast<std::size_t>(i) * ds.k + j]) {
        diff = true;
        break;
      }
    changed_cols += diff ? 1 : 0;
  }
  CHECK(changed_cols == kk);
}

TEST_CASE("selective dropout removes the label-informative group") {
  const Dataset ds = tiny_grouped_dataset();
  const auto dropped = selective_drop_groups(ds);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == 0);  // the y-dependent group

  const Dataset reduced = selective_dropout(ds);
  CHECK(reduced.k == 2);
  CHECK(reduced.groups.size() == 1);
  CHECK(reduced.groups[0] == std::vector<int>{0, 1});
}

TEST_CASE("selective dropout breaks exact ties toward keeping low indices") {
  Dataset ds;
  ds.d = 1;
  ds.k = 4;
  ds.kc = 2;
  for (int i = 0; i < 64; ++i) {
    ds.y.push_back(i % 2);
    ds.x.push_back(0.0);
    for (int j = 0; j < 4; ++j) ds.c.push_back(0);  // constant concepts: MI exactly 0
  }
  ds.groups = {{0}, {1}, {2}, {3}};
  const auto dropped = selective_drop_groups(ds);
  CHECK(dropped == std::vector<int>{2, 3});
}

TEST_CASE("selective dropout matches a brute-force MI ranking") {
  SynthSpec spec;
  spec.n = 1024;
  spec.k = 16;
  spec.g = 8;
  spec.p_flip = 0.15;
  spec.seed = 21;
  const Dataset ds = make_synthetic(spec);

  const int rows = std::min(ds.n(), 2048);
  std::vector<int> ys(ds.y.begin(), ds.y.begin() + rows);
  std::vector<std::pair<double, int>> scored;
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
    double acc = 0.0;
    for (int col : ds.groups[gi]) {
      std::vector<int> cv(static_cast<std::size_t>(rows));
      for (int i = 0; i < rows; ++i)
        cv[static_cast<std::size_t>(i)] = ds.c[static_cast<std::size_t>(i) * ds.k + col];
      acc += discrete_mi(ys, cv);
    }
    scored.emplace_back(acc / static_cast<double>(ds.groups[gi].size()), static_cast<int>(gi));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  });
  std::vector<int> expect;
  for (int i = 0; i < 4; ++i) expect.push_back(scored[static_cast<std::size_t>(i)].second);
  std::sort(expect.begin(), expect.end());
  CHECK(selective_drop_groups(ds) == expect);
}

TEST_CASE("random dropout is seeded and near-uniform") {
  const Dataset ds = tiny_grouped_dataset();
  const Dataset a = random_dropout(ds, 42);
  const Dataset b = random_dropout(ds, 42);
  CHECK(a.c == b.c);
  CHECK(a.groups.size() == 1);

  SynthSpec spec;
  spec.n = 64;
  spec.k = 16;
  spec.g = 4;
  const Dataset big = make_synthetic(spec);
  std::vector<int> survive(4, 0);
  const int trials = 1000;
  for (int s = 0; s < trials; ++s) {
    const auto dropped = random_drop_groups(big, static_cast<uint64_t>(s));
    std::set<int> gone(dropped.begin(), dropped.end());
    for (int gi = 0; gi < 4; ++gi)
      if (!gone.count(gi)) survive[static_cast<std::size_t>(gi)] += 1;
  }
  for (int gi = 0; gi < 4; ++gi) {
    const double rate = static_cast<double>(survive[static_cast<std::size_t>(gi)]) / trials;
    CHECK(std::abs(rate - 0.5) < 0.05);
  }
}

TEST_CASE("split is stratified and partitions the dataset") {
  SynthSpec spec;
  spec.n = 1000;
  spec.kc = 5;
  const Dataset ds = make_synthetic(spec);

  const SplitResult all = split(ds, 1.0, 0.0, 0.0, 3);
  CHECK(all.train.n() == ds.n());
  CHECK(all.val.n() == 0);
  CHECK(all.test.n() == 0);

  const SplitResult parts = split(ds, 0.6, 0.2, 0.2, 3);
  CHECK(parts.train.n() + parts.val.n() + parts.test.n() == ds.n());

  // per-class proportions within one sample of the global fractions
  std::vector<int> class_total(static_cast<std::size_t>(ds.kc), 0);
  for (int y : ds.y) class_total[static_cast<std::size_t>(y)] += 1;
  const double fr[3] = {0.6, 0.2, 0.2};
  const Dataset* sets[3] = {&parts.train, &parts.val, &parts.test};
  for (int s = 0; s < 3; ++s) {
    std::vector<int> cnt(static_cast<std::size_t>(ds.kc), 0);
    for (int y : sets[s]->y) cnt[static_cast<std::size_t>(y)] += 1;
    for (int c = 0; c < ds.kc; ++c)
      CHECK(std::abs(cnt[static_cast<std::size_t>(c)] -
                     fr[s] * class_total[static_cast<std::size_t>(c)]) <= 1.0);
  }

  // the union is a permutation of the original rows
  auto to_multiset = [&](const Dataset& d, std::multiset<std::vector<double>>& out) {
    for (int i = 0; i < d.n(); ++i) {
      std::vector<double> row(d.x_row(i), d.x_row(i) + d.d);
      row.push_back(static_cast<double>(d.y[static_cast<std::size_t>(i)]));
      out.insert(std::move(row));
    }
  };
  std::multiset<std::vector<double>> orig, joined;
  to_multiset(ds, orig);
  for (int s = 0; s < 3; ++s) to_multiset(*sets[s], joined);
  CHECK(orig == joined);

  // a class with fewer rows than positive splits is rejected
  Dataset small;
  small.d = 1;
  small.k = 1;
  small.kc = 2;
  small.x = {0.0, 1.0, 2.0};
  small.c = {0, 1, 0};
  small.y = {0, 0, 1};
  small.groups = {{0}};
  CHECK_THROWS_AS(split(small, 0.4, 0.3, 0.3, 1), validation_error);
}
