#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leaware/diffengine.hpp"
#include "leaware/matrix.hpp"

namespace leaware {

/// Labeled samples from one domain.
struct DomainDataset {
  Matrix features;
  std::vector<int> labels;
  std::string domain;
  std::uint64_t seed = 0;
  int num_classes = 0;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }

  /// Throws std::invalid_argument on empty data, NaN features, or labels
  /// outside [0, num_classes).
  void validate() const;
};

/// Two interleaved half circles (outer unit circle for class 0, inner circle
/// centred at (1, 0.5) for class 1), plus isotropic Gaussian noise. Samples
/// are shuffled; class counts differ by at most one.
DomainDataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

/// Gaussian clusters around `num_classes` centres evenly spaced on a circle of
/// radius 3 with a seeded phase.
DomainDataset gen_blobs(std::size_t n, int num_classes, double spread, std::uint64_t seed);

/// Centres used by gen_blobs for the same arguments.
Matrix blob_centers(int num_classes, std::uint64_t seed);

inline constexpr double kBlobRadius = 3.0;

/// Covariate shift x -> scale * R(rotation) x + translation + noise, where the
/// rotation acts on the first two feature axes around the origin.
struct DomainShift {
  double rotation = 0.0;  ///< radians
  std::vector<double> translation;
  double scale = 1.0;
  double noise = 0.0;
};

DomainDataset shift_domain(const DomainDataset& data, const DomainShift& shift,
                           const std::string& new_tag, std::uint64_t seed);

/// Per-class counts; index = label.
std::vector<std::size_t> class_counts(const DomainDataset& data);

/// Keeps floor(fraction * n_c) samples of every class c, chosen by a seeded
/// shuffle; original order is preserved among the kept samples.
DomainDataset stratified_subsample(const DomainDataset& data, double fraction, std::uint64_t seed);

/// Rows `indices` of `data` as a classification batch.
Batch make_batch(const DomainDataset& data, std::span<const std::size_t> indices);
Batch make_batch(const DomainDataset& data);

/// CSV with header f0,...,f{d-1},label,domain; floats written with 17
/// significant digits so load(save(d)) reproduces every bit.
void save_csv(const DomainDataset& data, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed or ragged rows, negative
/// labels, or labels >= num_classes when given. Throws std::runtime_error if
/// the file cannot be read or has no feature columns or no rows.
DomainDataset load_csv(const std::filesystem::path& path,
                       std::optional<int> num_classes = std::nullopt);

}  // namespace leaware
