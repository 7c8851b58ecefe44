#include "da/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "da/error.hpp"
#include "da/rng.hpp"

namespace da {

void LabeledDataset::validate() const {
  const auto n = static_cast<std::size_t>(features.rows());
  if (features.rows() < 1 || features.cols() < 1) {
    throw DataError("dataset: empty feature matrix");
  }
  if (labels.size() != n || ids.size() != n) {
    throw DataError("dataset: labels/ids size does not match feature rows");
  }
  if (!features.allFinite()) {
    throw DataError("dataset: non-finite feature value");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw DataError("dataset: label " + std::to_string(labels[i]) +
                      " out of range at row " + std::to_string(i));
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw DataError("dataset: duplicate id " + id);
  }
}

LabeledDataset LabeledDataset::subset(
    const std::vector<Eigen::Index>& rows) const {
  LabeledDataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    out.ids.push_back(ids[static_cast<std::size_t>(rows[i])]);
  }
  out.domain = domain;
  out.n_classes = n_classes;
  return out;
}

namespace data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& what) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_feature(const std::string& s, const std::string& path,
                     std::size_t line_no) {
  if (s.empty()) parse_fail(path, line_no, "empty feature field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    parse_fail(path, line_no, "malformed feature value '" + s + "'");
  }
  if (!std::isfinite(v)) {
    parse_fail(path, line_no, "non-finite feature value '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

LabeledDataset load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path);

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "domain" ||
      header[2] != "label") {
    parse_fail(path, 1, "header must be id,domain,label,f0,...");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[3 + j] != "f" + std::to_string(j)) {
      parse_fail(path, 1, "feature columns must be named f0..f" +
                              std::to_string(dim - 1));
    }
  }

  std::vector<std::string> ids;
  std::vector<std::string> domains;
  std::vector<int> labels;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // tolerate a trailing blank line

    auto fields = split_line(line);
    if (fields.size() != header.size()) {
      parse_fail(path, line_no,
                 "expected " + std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    }
    if (fields[0].empty()) parse_fail(path, line_no, "empty id");

    int label = -1;
    auto [ptr, ec] = std::from_chars(
        fields[2].data(), fields[2].data() + fields[2].size(), label);
    if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() ||
        label < 0) {
      parse_fail(path, line_no, "label must be a nonnegative integer, got '" +
                                    fields[2] + "'");
    }

    ids.push_back(fields[0]);
    domains.push_back(fields[1]);
    labels.push_back(label);
    for (std::size_t j = 0; j < dim; ++j) {
      values.push_back(parse_feature(fields[3 + j], path, line_no));
    }
  }
  if (ids.empty()) parse_fail(path, line_no, "no data rows");

  LabeledDataset ds;
  const auto n = static_cast<Eigen::Index>(ids.size());
  ds.features.resize(n, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dim); ++j) {
      ds.features(i, j) =
          values[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)];
    }
  }
  ds.labels = std::move(labels);
  ds.ids = std::move(ids);
  ds.domain = domains.front();
  ds.n_classes = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
  ds.validate();
  return ds;
}

std::string to_csv(const LabeledDataset& ds) {
  std::string out = "id,domain,label";
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    out += ",f" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    out += ds.ids[static_cast<std::size_t>(i)];
    out += ',';
    out += ds.domain;
    out += ',';
    out += std::to_string(ds.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < ds.cols(); ++j) {
      out += ',';
      out += format_double(ds.features(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_features(const LabeledDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file " + path);
  out << to_csv(ds);
  if (!out) throw IoError("write failed for " + path);
}

namespace {

// Row indices per class; throws when a class is underpopulated.
std::vector<std::vector<Eigen::Index>> indices_by_class(
    const LabeledDataset& ds, int min_per_class, const char* role) {
  std::vector<std::vector<Eigen::Index>> by_class(
      static_cast<std::size_t>(ds.n_classes));
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }
  for (int c = 0; c < ds.n_classes; ++c) {
    if (static_cast<int>(by_class[static_cast<std::size_t>(c)].size()) <
        min_per_class) {
      throw DataError(std::string(role) + " class " + std::to_string(c) +
                      " has " +
                      std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                      " examples, protocol needs " +
                      std::to_string(min_per_class));
    }
  }
  return by_class;
}

// First n entries of a seeded Fisher-Yates shuffle of idx.
std::vector<Eigen::Index> sample_without_replacement(
    std::vector<Eigen::Index> idx, int n, Rng& rng) {
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

}  // namespace

std::vector<Split> make_splits(const LabeledDataset& source,
                               const LabeledDataset& target,
                               const SplitSpec& spec) {
  if (spec.n_splits < 1) throw InvalidArgumentError("make_splits: n_splits < 1");
  if (spec.n_source_per_class < 0 || spec.n_target_labeled_per_class < 0) {
    throw InvalidArgumentError("make_splits: negative per-class count");
  }
  source.validate();
  target.validate();
  if (source.n_classes != target.n_classes) {
    throw DataError("make_splits: source and target class counts differ");
  }

  auto src_by_class =
      indices_by_class(source, spec.n_source_per_class, "source");
  auto tgt_by_class = indices_by_class(
      target, spec.n_target_labeled_per_class + 1, "target");

  std::vector<Split> splits;
  splits.reserve(static_cast<std::size_t>(spec.n_splits));
  for (int s = 0; s < spec.n_splits; ++s) {
    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(s)));

    std::vector<Eigen::Index> src_rows, tgt_labeled_rows, tgt_test_rows;
    for (int c = 0; c < source.n_classes; ++c) {
      auto picked = sample_without_replacement(
          src_by_class[static_cast<std::size_t>(c)], spec.n_source_per_class,
          rng);
      src_rows.insert(src_rows.end(), picked.begin(), picked.end());
    }
    for (int c = 0; c < target.n_classes; ++c) {
      const auto& all = tgt_by_class[static_cast<std::size_t>(c)];
      auto labeled = sample_without_replacement(
          all, spec.n_target_labeled_per_class, rng);
      std::unordered_set<Eigen::Index> taken(labeled.begin(), labeled.end());
      tgt_labeled_rows.insert(tgt_labeled_rows.end(), labeled.begin(),
                              labeled.end());
      for (Eigen::Index i : all) {
        if (!taken.count(i)) tgt_test_rows.push_back(i);
      }
    }

    Split split;
    split.source_train = source.subset(src_rows);
    split.target_train_labeled =
        spec.n_target_labeled_per_class > 0
            ? target.subset(tgt_labeled_rows)
            : LabeledDataset{Matrix(0, target.cols()),
                             {},
                             target.domain,
                             {},
                             target.n_classes};
    split.target_test = target.subset(tgt_test_rows);
    splits.push_back(std::move(split));
  }
  return splits;
}

std::pair<LabeledDataset, LabeledDataset> synth_domains(const SynthSpec& spec) {
  if (spec.n_classes < 1 || spec.dim < 1 || spec.n_per_class_source < 1 ||
      spec.n_per_class_target < 1) {
    throw InvalidArgumentError("synth_domains: counts must be >= 1");
  }
  if (spec.shift.rotation_angle != 0.0 && spec.dim < 2) {
    throw InvalidArgumentError("synth_domains: rotation needs dim >= 2");
  }
  if (spec.shift.mean_offset.size() != 0 &&
      spec.shift.mean_offset.size() != spec.dim) {
    throw InvalidArgumentError("synth_domains: offset length must equal dim");
  }

  Matrix means(spec.n_classes, spec.dim);
  means.setZero();
  for (int c = 0; c < spec.n_classes; ++c) {
    // Scaled simplex vertices; classes beyond dim reuse directions at a
    // larger radius so means stay distinct.
    means(c, c % spec.dim) = kSynthScale * (1.0 + c / spec.dim);
  }

  Rng rng(spec.seed);
  auto draw = [&](int c) {
    Vector x = means.row(c).transpose();
    for (Eigen::Index j = 0; j < spec.dim; ++j) {
      x(j) += spec.noise_sd * rng.next_gaussian();
    }
    return x;
  };

  LabeledDataset src;
  src.features.resize(
      static_cast<Eigen::Index>(spec.n_classes) * spec.n_per_class_source,
      spec.dim);
  src.domain = "synthetic-source";
  src.n_classes = spec.n_classes;
  Eigen::Index row = 0;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int i = 0; i < spec.n_per_class_source; ++i, ++row) {
      src.features.row(row) = draw(c).transpose();
      src.labels.push_back(c);
      src.ids.push_back("s" + std::to_string(row));
    }
  }

  const double ca = std::cos(spec.shift.rotation_angle);
  const double sa = std::sin(spec.shift.rotation_angle);
  LabeledDataset tgt;
  tgt.features.resize(
      static_cast<Eigen::Index>(spec.n_classes) * spec.n_per_class_target,
      spec.dim);
  tgt.domain = "synthetic-target";
  tgt.n_classes = spec.n_classes;
  row = 0;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int i = 0; i < spec.n_per_class_target; ++i, ++row) {
      Vector x = draw(c);
      if (spec.dim >= 2) {
        const double x0 = x(0), x1 = x(1);
        x(0) = ca * x0 - sa * x1;
        x(1) = sa * x0 + ca * x1;
      }
      if (spec.shift.mean_offset.size() == spec.dim) {
        x += spec.shift.mean_offset;
      }
      tgt.features.row(row) = x.transpose();
      tgt.labels.push_back(c);
      tgt.ids.push_back("t" + std::to_string(row));
    }
  }

  return {std::move(src), std::move(tgt)};
}

}  // namespace data
}  // namespace da
