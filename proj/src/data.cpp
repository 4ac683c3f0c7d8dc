#include "cibm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cibm/errors.hpp"
#include "cibm/info.hpp"
#include "cibm/rng.hpp"

namespace cibm {

Tensor Dataset::x_tensor() const {
  return Tensor({n(), d}, x);
}

Tensor Dataset::c_tensor() const {
  Tensor t = Tensor::zeros({n(), k});
  for (std::size_t i = 0; i < c.size(); ++i) t.data[i] = static_cast<double>(c[i]);
  return t;
}

void Dataset::validate() const {
  const std::size_t nn = y.size();
  if (x.size() != nn * static_cast<std::size_t>(d) || c.size() != nn * static_cast<std::size_t>(k))
    throw validation_error("dataset: X/C sizes inconsistent with N");
  for (uint8_t v : c)
    if (v > 1) throw validation_error("dataset: concept values must be 0/1");
  for (int v : y)
    if (v < 0 || v >= kc) throw validation_error("dataset: class index out of range");
  std::vector<int> seen(static_cast<std::size_t>(k), 0);
  for (const auto& grp : groups) {
    if (grp.empty()) throw validation_error("dataset: empty concept group");
    for (int idx : grp) {
      if (idx < 0 || idx >= k) throw validation_error("dataset: group member out of range");
      seen[static_cast<std::size_t>(idx)] += 1;
    }
  }
  for (int cnt : seen)
    if (cnt != 1) throw validation_error("dataset: groups must partition the concepts");
}

Dataset make_synthetic(const SynthSpec& spec) {
  if (spec.n <= 0 || spec.d <= 0 || spec.k <= 0 || spec.g <= 0 || spec.kc <= 0)
    throw validation_error("make_synthetic: sizes must be positive");
  if (spec.k % spec.g != 0)
    throw validation_error("make_synthetic: K must be divisible into G groups");
  if (!(spec.p_flip >= 0.0 && spec.p_flip < 0.5))
    throw validation_error("make_synthetic: p_flip must be in [0, 0.5)");
  if (spec.leak < 0.0) throw validation_error("make_synthetic: leak must be >= 0");
  if (!(spec.x_noise > 0.0)) throw validation_error("make_synthetic: x_noise must be > 0");

  RngStream maps_rng(spec.seed, "synth-maps");
  RngStream label_rng(spec.seed, "synth-labels");
  RngStream flip_rng(spec.seed, "synth-flips");
  RngStream noise_rng(spec.seed, "synth-noise");

  // class-level concept templates
  std::vector<uint8_t> tmpl(static_cast<std::size_t>(spec.kc) * spec.k);
  for (auto& b : tmpl) b = maps_rng.bernoulli(0.5) ? 1 : 0;

  // fixed random maps; scaled so per-dim contributions stay O(1)
  const double a_sd = 1.0 / std::sqrt(static_cast<double>(spec.k));
  const double b_sd = 1.0 / std::sqrt(static_cast<double>(spec.kc));
  std::vector<double> amap(static_cast<std::size_t>(spec.d) * spec.k);
  std::vector<double> bmap(static_cast<std::size_t>(spec.d) * spec.kc);
  for (auto& v : amap) v = a_sd * maps_rng.normal();
  for (auto& v : bmap) v = b_sd * maps_rng.normal();

  Dataset ds;
  ds.d = spec.d;
  ds.k = spec.k;
  ds.kc = spec.kc;
  ds.x.resize(static_cast<std::size_t>(spec.n) * spec.d);
  ds.c.resize(static_cast<std::size_t>(spec.n) * spec.k);
  ds.y.resize(static_cast<std::size_t>(spec.n));

  for (int i = 0; i < spec.n; ++i) {
    const int yi = static_cast<int>(label_rng.uniform_int(static_cast<uint64_t>(spec.kc)));
    ds.y[static_cast<std::size_t>(i)] = yi;
    uint8_t* ci = ds.c.data() + static_cast<std::size_t>(i) * spec.k;
    const uint8_t* ti = tmpl.data() + static_cast<std::size_t>(yi) * spec.k;
    for (int j = 0; j < spec.k; ++j)
      ci[j] = flip_rng.bernoulli(spec.p_flip) ? static_cast<uint8_t>(1 - ti[j]) : ti[j];
    double* xi = ds.x.data() + static_cast<std::size_t>(i) * spec.d;
    for (int dd = 0; dd < spec.d; ++dd) {
      double acc = 0.0;
      const double* arow = amap.data() + static_cast<std::size_t>(dd) * spec.k;
      for (int j = 0; j < spec.k; ++j)
        if (ci[j]) acc += arow[j];
      acc += spec.leak * bmap[static_cast<std::size_t>(dd) * spec.kc + yi];
      acc += spec.x_noise * noise_rng.normal();
      xi[dd] = acc;
    }
  }

  const int per = spec.k / spec.g;
  ds.groups.resize(static_cast<std::size_t>(spec.g));
  for (int gi = 0; gi < spec.g; ++gi)
    for (int j = 0; j < per; ++j) ds.groups[static_cast<std::size_t>(gi)].push_back(gi * per + j);

  ds.split_tag = "full";
  return ds;
}

namespace {

std::string groups_sidecar_path(const std::string& csv_path) {
  if (csv_path.size() > 4 && csv_path.substr(csv_path.size() - 4) == ".csv")
    return csv_path.substr(0, csv_path.size() - 4) + ".groups";
  return csv_path + ".groups";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, int line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw data_error("csv line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset load_concept_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw data_error("csv line 1: missing header");
  const auto header = split_fields(line);

  int d = 0, k = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0)
      ++d;
    else if (h.rfind("c_", 0) == 0)
      ++k;
  }
  if (d == 0 || k == 0 || header.size() != static_cast<std::size_t>(d + k + 1) ||
      header.back() != "y")
    throw data_error("csv line 1: header must be x_0..x_" + std::to_string(d - 1) +
                     ",c_0..c_" + std::to_string(k - 1) + ",y");
  for (int j = 0; j < d; ++j)
    if (header[static_cast<std::size_t>(j)] != "x_" + std::to_string(j))
      throw data_error("csv line 1: unexpected column '" + header[static_cast<std::size_t>(j)] +
                       "'");
  for (int j = 0; j < k; ++j)
    if (header[static_cast<std::size_t>(d + j)] != "c_" + std::to_string(j))
      throw data_error("csv line 1: unexpected column '" +
                       header[static_cast<std::size_t>(d + j)] + "'");

  Dataset ds;
  ds.d = d;
  ds.k = k;
  int max_y = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw data_error("csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    for (int j = 0; j < d; ++j)
      ds.x.push_back(parse_double(fields[static_cast<std::size_t>(j)], line_no));
    for (int j = 0; j < k; ++j) {
      const double v = parse_double(fields[static_cast<std::size_t>(d + j)], line_no);
      if (v != 0.0 && v != 1.0)
        throw data_error("csv line " + std::to_string(line_no) + ": concept value " +
                         fields[static_cast<std::size_t>(d + j)] + " is not 0/1");
      ds.c.push_back(static_cast<uint8_t>(v));
    }
    const double yv = parse_double(fields.back(), line_no);
    if (yv != std::floor(yv) || yv < 0.0)
      throw data_error("csv line " + std::to_string(line_no) + ": label must be a non-negative integer");
    ds.y.push_back(static_cast<int>(yv));
    max_y = std::max(max_y, ds.y.back());
  }
  if (ds.y.empty()) throw data_error("csv: no data rows in " + path);
  ds.kc = max_y + 1;

  const std::string gpath = groups_sidecar_path(path);
  std::ifstream gin(gpath);
  if (gin) {
    std::string gline;
    int gline_no = 0;
    std::set<int> assigned;
    while (std::getline(gin, gline)) {
      ++gline_no;
      if (gline.empty()) continue;
      std::vector<int> grp;
      for (const auto& name : split_fields(gline)) {
        if (name.rfind("c_", 0) != 0)
          throw data_error("groups line " + std::to_string(gline_no) + ": unknown member '" +
                           name + "'");
        int idx = -1;
        auto res = std::from_chars(name.data() + 2, name.data() + name.size(), idx);
        if (res.ec != std::errc{} || res.ptr != name.data() + name.size() || idx < 0 || idx >= k)
          throw data_error("groups line " + std::to_string(gline_no) + ": unknown member '" +
                           name + "'");
        if (!assigned.insert(idx).second)
          throw data_error("groups line " + std::to_string(gline_no) + ": '" + name +
                           "' listed twice");
        grp.push_back(idx);
      }
      if (!grp.empty()) ds.groups.push_back(std::move(grp));
    }
    if (static_cast<int>(assigned.size()) != k)
      throw data_error("groups file " + gpath + ": not every concept is assigned to a group");
  } else {
    for (int j = 0; j < k; ++j) ds.groups.push_back({j});
  }

  ds.split_tag = "full";
  ds.validate();
  return ds;
}

void write_concept_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  for (int j = 0; j < ds.d; ++j) out << "x_" << j << ',';
  for (int j = 0; j < ds.k; ++j) out << "c_" << j << ',';
  out << "y\n";
  for (int i = 0; i < ds.n(); ++i) {
    const double* xi = ds.x_row(i);
    for (int j = 0; j < ds.d; ++j) out << format_double(xi[j]) << ',';
    const uint8_t* ci = ds.c_row(i);
    for (int j = 0; j < ds.k; ++j) out << static_cast<int>(ci[j]) << ',';
    out << ds.y[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw data_error("write failed for " + path);

  std::ofstream gout(groups_sidecar_path(path), std::ios::binary);
  if (!gout) throw data_error("cannot write " + groups_sidecar_path(path));
  for (const auto& grp : ds.groups) {
    for (std::size_t j = 0; j < grp.size(); ++j) {
      if (j) gout << ',';
      gout << "c_" << grp[j];
    }
    gout << '\n';
  }
}

Dataset corrupt_concepts(const Dataset& ds, int k, uint64_t seed) {
  if (k < 0 || k > ds.k)
    throw validation_error("corrupt_concepts: k must be in [0, K]");
  Dataset out = ds;
  if (k == 0) return out;

  RngStream rng(seed, "corrupt");
  std::vector<int> cols(static_cast<std::size_t>(ds.k));
  std::iota(cols.begin(), cols.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(ds.k - i)));
    std::swap(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < ds.n(); ++i) {
    uint8_t* ci = out.c.data() + static_cast<std::size_t>(i) * ds.k;
    for (int t = 0; t < k; ++t)
      ci[cols[static_cast<std::size_t>(t)]] = rng.bernoulli(0.5) ? 1 : 0;
  }
  return out;
}

std::vector<int> selective_drop_groups(const Dataset& ds, int subsample) {
  if (ds.groups.size() < 2)
    throw validation_error("selective dropout needs at least 2 groups");
  const int rows = std::min(ds.n(), subsample);
  std::vector<int> ys(ds.y.begin(), ds.y.begin() + rows);

  const int g = static_cast<int>(ds.groups.size());
  std::vector<double> score(static_cast<std::size_t>(g), 0.0);
  for (int gi = 0; gi < g; ++gi) {
    double acc = 0.0;
    for (int col : ds.groups[static_cast<std::size_t>(gi)]) {
      std::vector<int> cv(static_cast<std::size_t>(rows));
      for (int i = 0; i < rows; ++i)
        cv[static_cast<std::size_t>(i)] = ds.c[static_cast<std::size_t>(i) * ds.k + col];
      acc += discrete_mi(ys, cv);
    }
    score[static_cast<std::size_t>(gi)] = acc / static_cast<double>(ds.groups[static_cast<std::size_t>(gi)].size());
  }

  std::vector<int> idx(static_cast<std::size_t>(g));
  std::iota(idx.begin(), idx.end(), 0);
  // highest score dropped first; on ties drop the higher index so the lowest
  // group indices are the ones retained
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    return a > b;
  });
  idx.resize(static_cast<std::size_t>(g / 2));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> random_drop_groups(const Dataset& ds, uint64_t seed) {
  if (ds.groups.size() < 2)
    throw validation_error("random dropout needs at least 2 groups");
  const int g = static_cast<int>(ds.groups.size());
  RngStream rng(seed, "rand-drop");
  std::vector<int> idx(static_cast<std::size_t>(g));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < g / 2; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(g - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(g / 2));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<int> kept_concept_columns(const Dataset& ds, const std::vector<int>& dropped) {
  std::vector<uint8_t> drop(ds.groups.size(), 0);
  for (int gi : dropped) {
    if (gi < 0 || gi >= static_cast<int>(ds.groups.size()))
      throw validation_error("drop_groups: unknown group id " + std::to_string(gi));
    drop[static_cast<std::size_t>(gi)] = 1;
  }
  std::vector<int> cols;
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi)
    if (!drop[gi])
      for (int col : ds.groups[gi]) cols.push_back(col);
  std::sort(cols.begin(), cols.end());
  return cols;
}

Dataset drop_groups(const Dataset& ds, const std::vector<int>& group_ids) {
  const std::vector<int> cols = kept_concept_columns(ds, group_ids);
  std::vector<int> remap(static_cast<std::size_t>(ds.k), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) remap[static_cast<std::size_t>(cols[j])] = static_cast<int>(j);

  Dataset out;
  out.d = ds.d;
  out.k = static_cast<int>(cols.size());
  out.kc = ds.kc;
  out.x = ds.x;
  out.y = ds.y;
  out.split_tag = ds.split_tag;
  out.c.resize(static_cast<std::size_t>(ds.n()) * out.k);
  for (int i = 0; i < ds.n(); ++i) {
    const uint8_t* src = ds.c_row(i);
    uint8_t* dst = out.c.data() + static_cast<std::size_t>(i) * out.k;
    for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
  }
  std::vector<uint8_t> dropped(ds.groups.size(), 0);
  for (int gi : group_ids) dropped[static_cast<std::size_t>(gi)] = 1;
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
    if (dropped[gi]) continue;
    std::vector<int> grp;
    for (int col : ds.groups[gi]) grp.push_back(remap[static_cast<std::size_t>(col)]);
    out.groups.push_back(std::move(grp));
  }
  return out;
}

Dataset selective_dropout(const Dataset& ds) {
  return drop_groups(ds, selective_drop_groups(ds));
}

Dataset random_dropout(const Dataset& ds, uint64_t seed) {
  return drop_groups(ds, random_drop_groups(ds, seed));
}

SplitResult split(const Dataset& ds, double f_train, double f_val, double f_test,
                  uint64_t seed) {
  const double fr[3] = {f_train, f_val, f_test};
  double total = 0.0;
  int positive = 0;
  for (double f : fr) {
    if (f < 0.0) throw validation_error("split: fractions must be non-negative");
    total += f;
    if (f > 0.0) ++positive;
  }
  if (std::abs(total - 1.0) > 1e-9) throw validation_error("split: fractions must sum to 1");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.kc));
  for (int i = 0; i < ds.n(); ++i) by_class[static_cast<std::size_t>(ds.y[static_cast<std::size_t>(i)])].push_back(i);

  RngStream rng(seed, "split");
  std::vector<std::vector<int>> parts(3);
  for (auto& rows : by_class) {
    if (rows.empty()) continue;
    if (static_cast<int>(rows.size()) < positive)
      throw validation_error("split: a class has fewer rows than splits");
    for (std::size_t i = rows.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_int(i);
      std::swap(rows[i - 1], rows[j]);
    }
    const double nc = static_cast<double>(rows.size());
    int counts[3];
    double fpart[3];
    int used = 0;
    for (int s = 0; s < 3; ++s) {
      const double want = fr[s] * nc;
      counts[s] = static_cast<int>(std::floor(want));
      fpart[s] = want - counts[s];
      used += counts[s];
    }
    int remain = static_cast<int>(rows.size()) - used;
    // largest remainder; ties to the earlier split
    std::vector<int> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fpart[a] > fpart[b]; });
    for (int r = 0; r < remain; ++r) counts[order[static_cast<std::size_t>(r % 3)]] += 1;

    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < counts[s]; ++t) parts[static_cast<std::size_t>(s)].push_back(rows[pos++]);
  }

  auto take = [&](const std::vector<int>& rows, const char* tag) {
    Dataset out;
    out.d = ds.d;
    out.k = ds.k;
    out.kc = ds.kc;
    out.groups = ds.groups;
    out.split_tag = tag;
    std::vector<int> sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    out.x.reserve(sorted.size() * static_cast<std::size_t>(ds.d));
    out.c.reserve(sorted.size() * static_cast<std::size_t>(ds.k));
    for (int i : sorted) {
      const double* xi = ds.x_row(i);
      out.x.insert(out.x.end(), xi, xi + ds.d);
      const uint8_t* ci = ds.c_row(i);
      out.c.insert(out.c.end(), ci, ci + ds.k);
      out.y.push_back(ds.y[static_cast<std::size_t>(i)]);
    }
    return out;
  };

  SplitResult res{take(parts[0], "train"), take(parts[1], "val"), take(parts[2], "test")};
  return res;
}

}  // namespace cibm
