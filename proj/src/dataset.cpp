#include "nrfi/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "nrfi/error.hpp"
#include "nrfi/random.hpp"

namespace nrfi {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto cell = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    cells.emplace_back(trim(cell));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  return by_class;
}

// Largest-remainder apportionment of `total` into parts proportional to `weights`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights) {
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    const double exact = static_cast<double>(total) * weights[p] / weight_sum;
    counts[p] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[p];
    remainders.emplace_back(exact - std::floor(exact), p);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_count = class_count;
  out.class_names = class_names;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

void Dataset::validate() const {
  if (features.cols() < 1) throw DataError("dataset needs at least one feature");
  if (class_count < 2) throw DataError("dataset needs at least two classes, got " + std::to_string(class_count));
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DataError("feature rows (" + std::to_string(features.rows()) + ") and labels (" +
                    std::to_string(labels.size()) + ") differ");
  for (int label : labels)
    if (label < 0 || label >= class_count)
      throw DataError("label " + std::to_string(label) + " outside [0, " + std::to_string(class_count) + ")");
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV file is empty: " + path.string());
  const auto header = split_line(line);

  std::size_t label_index = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError("label column '" + *name + "' not found in " + path.string());
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    label_index = std::get<std::size_t>(label_column);
    if (label_index >= header.size())
      throw DataError("label column index " + std::to_string(label_index) + " out of range");
  }
  if (header.size() < 2) throw DataError("CSV needs at least one feature column and a label column");

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("line " + std::to_string(line_number) + ": expected " + std::to_string(header.size()) +
                      " cells, got " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_index) {
        if (cells[c].empty()) throw DataError("line " + std::to_string(line_number) + ": empty label");
        raw_labels.push_back(cells[c]);
        continue;
      }
      const auto v = parse_double(cells[c]);
      if (!v)
        throw DataError("line " + std::to_string(line_number) + ", column '" + header[c] +
                        "': non-numeric feature value '" + cells[c] + "'");
      values.push_back(*v);
    }
  }
  if (raw_labels.empty()) throw DataError("CSV has no data rows: " + path.string());

  // Label encoding: numeric order if all labels are integers, else lexicographic.
  std::vector<std::string> names = raw_labels;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  const bool all_integer = std::all_of(names.begin(), names.end(), [](const auto& s) { return parse_integer(s).has_value(); });
  if (all_integer)
    std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return *parse_integer(a) < *parse_integer(b); });
  if (names.size() < 2) throw DataError("CSV contains a single class; at least two are required");

  std::map<std::string, int> code;
  for (std::size_t i = 0; i < names.size(); ++i) code[names[i]] = static_cast<int>(i);

  Dataset ds;
  const auto n_features = static_cast<Eigen::Index>(header.size() - 1);
  ds.features = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(raw_labels.size()), n_features);
  ds.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) ds.labels.push_back(code.at(l));
  ds.class_count = static_cast<int>(names.size());
  ds.class_names = std::move(names);
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path.string());
  out.precision(17);
  for (int f = 0; f < ds.feature_count(); ++f) out << 'x' << f << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.row(i)) out << v << ',';
    const auto label = static_cast<std::size_t>(ds.labels[i]);
    if (label < ds.class_names.size())
      out << ds.class_names[label];
    else
      out << label;
    out << '\n';
  }
}

std::array<std::vector<std::size_t>, 3> split_indices(const Dataset& ds, const SplitFractions& fractions,
                                                      std::uint64_t seed) {
  const std::array<double, 3> weights{fractions.train, fractions.validation, fractions.test};
  for (double w : weights)
    if (!(w > 0.0)) throw DataError("split fractions must be positive");
  if (std::abs(weights[0] + weights[1] + weights[2] - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");

  auto by_class = indices_by_class(ds);
  Rng rng(seed);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng.engine());

  const std::size_t n_classes = by_class.size();
  const auto targets = apportion(ds.size(), weights);

  // counts[c][p]: floors of the per-class quotas, then residual units placed by
  // descending remainder subject to both row (class) and column (part) totals.
  std::vector<std::array<std::size_t, 3>> counts(n_classes, {0, 0, 0});
  std::vector<std::size_t> row_need(n_classes);
  std::array<std::size_t, 3> col_need{targets[0], targets[1], targets[2]};
  struct Residual {
    double remainder;
    std::size_t c;
    std::size_t p;
  };
  std::vector<Residual> residuals;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double n_c = static_cast<double>(by_class[c].size());
    std::size_t placed = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double exact = n_c * weights[p];
      counts[c][p] = static_cast<std::size_t>(std::floor(exact));
      placed += counts[c][p];
      col_need[p] -= std::min(col_need[p], counts[c][p]);
      residuals.push_back({exact - std::floor(exact), c, p});
    }
    row_need[c] = by_class[c].size() - placed;
  }
  std::stable_sort(residuals.begin(), residuals.end(),
                   [](const Residual& a, const Residual& b) { return a.remainder > b.remainder; });
  for (const auto& r : residuals) {
    if (row_need[r.c] > 0 && col_need[r.p] > 0) {
      ++counts[r.c][r.p];
      --row_need[r.c];
      --col_need[r.p];
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t p = 0; row_need[c] > 0; p = (p + 1) % 3) {
      if (col_need[p] > 0 || std::all_of(col_need.begin(), col_need.end(), [](auto v) { return v == 0; })) {
        ++counts[c][p];
        --row_need[c];
        if (col_need[p] > 0) --col_need[p];
      }
    }
  }

  // Representation guarantees for small classes.
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& k = counts[c];
    const std::size_t n_c = by_class[c].size();
    if (n_c == 0) continue;
    if (n_c < 3) {
      k = {1, 0, 0};
      if (n_c == 2) k[1] = 1;
      continue;
    }
    for (std::size_t p = 0; p < 3; ++p) {
      if (k[p] == 0) {
        auto donor = static_cast<std::size_t>(std::max_element(k.begin(), k.end()) - k.begin());
        --k[donor];
        ++k[p];
      }
    }
  }

  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t j = 0; j < counts[c][p]; ++j) parts[p].push_back(by_class[c][offset + j]);
      offset += counts[c][p];
    }
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

DatasetSplit split_dataset(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  const auto parts = split_indices(ds, fractions, seed);
  return {ds.subset(parts[0]), ds.subset(parts[1]), ds.subset(parts[2])};
}

Dataset limit_per_class(const Dataset& ds, int n_limit, std::uint64_t seed) {
  if (n_limit < 1) throw DataError("n_limit must be at least 1");
  auto by_class = indices_by_class(ds);
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto n = std::min(members.size(), static_cast<std::size_t>(n_limit));
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "blobs") return SyntheticKind::Blobs;
  if (name == "two_moons") return SyntheticKind::TwoMoons;
  if (name == "xor_grid") return SyntheticKind::XorGrid;
  throw DataError("unknown synthetic dataset kind '" + std::string(name) + "' (expected blobs, two_moons or xor_grid)");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Blobs: return "blobs";
    case SyntheticKind::TwoMoons: return "two_moons";
    case SyntheticKind::XorGrid: return "xor_grid";
  }
  return "unknown";
}

Dataset make_synthetic(SyntheticKind kind, std::size_t n_samples, int n_features, double noise,
                       std::uint64_t seed, int class_count) {
  if (kind != SyntheticKind::Blobs) class_count = 2;
  if (class_count < 2) throw DataError("synthetic data needs at least two classes");
  if (n_features < 1) throw DataError("synthetic data needs at least one feature");
  if (n_samples < static_cast<std::size_t>(class_count)) throw DataError("n_samples must be at least the class count");
  if (noise < 0.0) throw DataError("noise must be non-negative");
  if (kind != SyntheticKind::Blobs && n_features < 2)
    throw DataError(std::string(to_string(kind)) + " requires at least two features");

  Rng rng(seed);
  Dataset ds;
  ds.class_count = class_count;
  ds.features.resize(static_cast<Eigen::Index>(n_samples), n_features);
  ds.labels.resize(n_samples);

  RowMatrix centers;
  if (kind == SyntheticKind::Blobs) {
    centers.resize(class_count, n_features);
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      for (Eigen::Index f = 0; f < centers.cols(); ++f) centers(c, f) = rng.uniform(-5.0, 5.0);
  }

  for (std::size_t i = 0; i < n_samples; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(class_count));
    ds.labels[i] = label;
    auto row = ds.features.row(static_cast<Eigen::Index>(i));
    switch (kind) {
      case SyntheticKind::Blobs:
        for (int f = 0; f < n_features; ++f) row(f) = centers(label, f) + noise * rng.normal();
        break;
      case SyntheticKind::TwoMoons: {
        const double t = rng.uniform(0.0, std::numbers::pi);
        if (label == 0) {
          row(0) = std::cos(t);
          row(1) = std::sin(t);
        } else {
          row(0) = 1.0 - std::cos(t);
          row(1) = 0.5 - std::sin(t);
        }
        row(0) += noise * rng.normal();
        row(1) += noise * rng.normal();
        for (int f = 2; f < n_features; ++f) row(f) = noise * rng.normal();
        break;
      }
      case SyntheticKind::XorGrid: {
        // class 0: signs agree, class 1: signs differ
        const double s0 = rng.bernoulli(0.5) ? 1.0 : -1.0;
        const double s1 = label == 0 ? s0 : -s0;
        row(0) = s0 * rng.uniform(0.0, 1.0) + noise * rng.normal();
        row(1) = s1 * rng.uniform(0.0, 1.0) + noise * rng.normal();
        for (int f = 2; f < n_features; ++f) row(f) = noise * rng.normal();
        break;
      }
    }
  }
  return ds;
}

double zero_fraction(const RowMatrix& features) {
  if (features.size() == 0) return 0.0;
  return static_cast<double>((features.array() == 0.0).count()) / static_cast<double>(features.size());
}

}  // namespace nrfi
