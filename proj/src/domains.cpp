#include "leaware/domains.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "leaware/errors.hpp"
#include "leaware/rng.hpp"

namespace leaware {

void DomainDataset::validate() const {
  if (size() == 0 || dim() == 0) throw std::invalid_argument("dataset is empty");
  if (labels.size() != size()) throw std::invalid_argument("dataset: label count mismatch");
  if (!features.all_finite()) throw std::invalid_argument("dataset: non-finite feature value");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

namespace {

void shuffle_rows(DomainDataset& d, Rng& rng) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix f(d.size(), d.dim());
  std::vector<int> y(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy_n(d.features.row(order[i]).begin(), d.dim(), f.row(i).begin());
    y[i] = d.labels[order[i]];
  }
  d.features = std::move(f);
  d.labels = std::move(y);
}

double linspace_at(std::size_t i, std::size_t count, double stop) {
  return count <= 1 ? 0.0 : stop * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace

DomainDataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_two_moons: n must be >= 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("gen_two_moons: noise must be >= 0");
  const std::size_t n_outer = n / 2;
  const std::size_t n_inner = n - n_outer;

  DomainDataset d;
  d.features = Matrix(n, 2);
  d.labels.resize(n);
  d.domain = "source";
  d.seed = seed;
  d.num_classes = 2;

  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n_outer; ++i) {
    const double t = linspace_at(i, n_outer, pi);
    d.features(i, 0) = std::cos(t);
    d.features(i, 1) = std::sin(t);
    d.labels[i] = 0;
  }
  for (std::size_t i = 0; i < n_inner; ++i) {
    const double t = linspace_at(i, n_inner, pi);
    d.features(n_outer + i, 0) = 1.0 - std::cos(t);
    d.features(n_outer + i, 1) = 0.5 - std::sin(t);
    d.labels[n_outer + i] = 1;
  }

  Rng rng(seed);
  shuffle_rows(d, rng);
  if (noise > 0.0) {
    std::normal_distribution<double> normal(0.0, noise);
    for (auto& v : d.features.flat()) v += normal(rng);
  }
  return d;
}

Matrix blob_centers(int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("gen_blobs: num_classes must be >= 2");
  Rng rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double phase = phase_dist(rng);
  Matrix c(static_cast<std::size_t>(num_classes), 2);
  for (int k = 0; k < num_classes; ++k) {
    const double a = phase + 2.0 * std::numbers::pi * k / num_classes;
    c(k, 0) = kBlobRadius * std::cos(a);
    c(k, 1) = kBlobRadius * std::sin(a);
  }
  return c;
}

DomainDataset gen_blobs(std::size_t n, int num_classes, double spread, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_blobs: n must be >= 1");
  if (!(spread >= 0.0)) throw std::invalid_argument("gen_blobs: spread must be >= 0");
  const Matrix centers = blob_centers(num_classes, seed);

  DomainDataset d;
  d.features = Matrix(n, 2);
  d.labels.resize(n);
  d.domain = "source";
  d.seed = seed;
  d.num_classes = num_classes;
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<int>(i % num_classes);

  Rng rng(derive_seed(seed, 1));
  std::shuffle(d.labels.begin(), d.labels.end(), rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(d.labels[i]);
    for (std::size_t j = 0; j < 2; ++j) d.features(i, j) = centers(k, j) + spread * normal(rng);
  }
  return d;
}

DomainDataset shift_domain(const DomainDataset& data, const DomainShift& shift,
                           const std::string& new_tag, std::uint64_t seed) {
  if (!shift.translation.empty() && shift.translation.size() != data.dim()) {
    throw std::invalid_argument("shift_domain: translation has " +
                                std::to_string(shift.translation.size()) +
                                " components for " + std::to_string(data.dim()) + "-d features");
  }
  if (!(shift.scale > 0.0)) throw std::invalid_argument("shift_domain: scale must be > 0");
  if (!(shift.noise >= 0.0)) throw std::invalid_argument("shift_domain: noise must be >= 0");
  if (shift.rotation != 0.0 && data.dim() < 2) {
    throw std::invalid_argument("shift_domain: rotation needs at least 2 feature dims");
  }

  DomainDataset out = data;
  out.domain = new_tag;
  out.seed = seed;
  const double c = std::cos(shift.rotation);
  const double s = std::sin(shift.rotation);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = out.features.row(i);
    if (shift.rotation != 0.0) {
      const double x = row[0];
      const double y = row[1];
      row[0] = c * x - s * y;
      row[1] = s * x + c * y;
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (shift.scale != 1.0) row[j] *= shift.scale;
      if (!shift.translation.empty()) row[j] += shift.translation[j];
      if (shift.noise > 0.0) row[j] += shift.noise * normal(rng);
    }
  }
  return out;
}

std::vector<std::size_t> class_counts(const DomainDataset& data) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(data.num_classes, 0)), 0);
  for (int y : data.labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < counts.size()) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

DomainDataset stratified_subsample(const DomainDataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("stratified_subsample: fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return data;

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    const auto take =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(idx.size())));
    Rng rng(derive_seed(seed, c));
    std::shuffle(idx.begin(), idx.end(), rng);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (keep.empty()) throw std::invalid_argument("stratified_subsample: fraction keeps no samples");
  std::sort(keep.begin(), keep.end());

  DomainDataset out;
  out.features = Matrix(keep.size(), data.dim());
  out.labels.resize(keep.size());
  out.domain = data.domain;
  out.seed = data.seed;
  out.num_classes = data.num_classes;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::copy_n(data.features.row(keep[r]).begin(), data.dim(), out.features.row(r).begin());
    out.labels[r] = data.labels[keep[r]];
  }
  return out;
}

Batch make_batch(const DomainDataset& data, std::span<const std::size_t> indices) {
  Batch b;
  b.inputs = Matrix(indices.size(), data.dim());
  b.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::copy_n(data.features.row(indices[r]).begin(), data.dim(), b.inputs.row(r).begin());
    b.labels[r] = data.labels[indices[r]];
  }
  return b;
}

Batch make_batch(const DomainDataset& data) {
  Batch b;
  b.inputs = data.features;
  b.labels = data.labels;
  return b;
}

void save_csv(const DomainDataset& data, const std::filesystem::path& path) {
  if (data.size() == 0 || data.dim() == 0) throw std::invalid_argument("save_csv: empty dataset");
  if (data.domain.empty() || data.domain.find_first_of(",\n\r") != std::string::npos) {
    throw std::invalid_argument("save_csv: domain tag must be a non-empty token without commas");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path.string() + " for writing");

  std::string line;
  for (std::size_t j = 0; j < data.dim(); ++j) line += "f" + std::to_string(j) + ",";
  line += "label,domain\n";
  out << line;

  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    line.clear();
    for (double v : data.features.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
      line.append(buf, res.ptr);
      line += ',';
    }
    line += std::to_string(data.labels[i]);
    line += ',';
    line += data.domain;
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

DomainDataset load_csv(const std::filesystem::path& path, std::optional<int> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3) throw ParseError(1, "header has no feature columns");
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw ParseError(1, "expected column 'f" + std::to_string(j) + "', got '" +
                              std::string(header[j]) + "'");
    }
  }
  if (header[dim] != "label" || header[dim + 1] != "domain") {
    throw ParseError(1, "last two columns must be 'label,domain'");
  }

  DomainDataset d;
  std::vector<double> row(dim);
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != dim + 2) {
      throw ParseError(lineno, "expected " + std::to_string(dim + 2) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const auto cell = cells[j];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), row[j]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(row[j])) {
        throw ParseError(lineno, "bad feature value '" + std::string(cell) + "'");
      }
    }
    int label = 0;
    const auto lc = cells[dim];
    const auto res = std::from_chars(lc.data(), lc.data() + lc.size(), label);
    if (res.ec != std::errc() || res.ptr != lc.data() + lc.size()) {
      throw ParseError(lineno, "bad label '" + std::string(lc) + "'");
    }
    if (label < 0 || (num_classes && label >= *num_classes)) {
      throw ParseError(lineno, "label " + std::to_string(label) + " out of range");
    }
    if (cells[dim + 1].empty()) throw ParseError(lineno, "empty domain tag");
    if (d.size() == 0) {
      d.domain = std::string(cells[dim + 1]);
    } else if (cells[dim + 1] != d.domain) {
      throw ParseError(lineno, "mixed domain tags in one file");
    }
    d.features.push_row(row);
    d.labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (d.size() == 0) throw std::runtime_error("load_csv: " + path.string() + " has no samples");
  d.num_classes = num_classes ? *num_classes : max_label + 1;
  return d;
}

}  // namespace leaware
