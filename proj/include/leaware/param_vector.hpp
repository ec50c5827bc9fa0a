#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace leaware {

/// Flat, contiguous parameter state of a model. All trainable weights and
/// biases live in one vector so the training map can be treated as a map on
/// a single state vector.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }

  const double* data() const noexcept { return values_.data(); }
  double* data() noexcept { return values_.data(); }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);
double squared_norm(const ParamVector& a);

ParamVector operator+(const ParamVector& a, const ParamVector& b);
ParamVector operator-(const ParamVector& a, const ParamVector& b);
ParamVector operator*(double s, const ParamVector& a);

/// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);

/// Throws std::invalid_argument when dims differ.
void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what);

}  // namespace leaware
