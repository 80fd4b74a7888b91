#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace lpforge {

/// Dense row-major float64 tensor. Generic value carrier for inputs,
/// perturbations and gradients; shape product must equal the buffer length.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols);
  static Tensor zeros_like(const Tensor& other);

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }

  // 2-D accessors; throw on rank mismatch
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;

  bool all_finite() const;
  void check_shape_matches(const Tensor& other, const char* what) const;
};

/// Flattened input gradient in R^d; the argument of every norm, attack and
/// concentration formula. dim >= 1 wherever a formula requires it.
struct GradVector {
  std::vector<double> values;

  GradVector() = default;
  explicit GradVector(std::vector<double> v) : values(std::move(v)) {}
  explicit GradVector(std::size_t d) : values(d, 0.0) {}

  std::size_t dim() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const;
  bool all_zero() const;
};

GradVector flatten(const Tensor& t);
Tensor to_tensor(const GradVector& v, const std::vector<std::size_t>& shape);

double dot(const GradVector& a, const GradVector& b);
GradVector add_scaled(const GradVector& a, const GradVector& b, double scale);

/// Value of a scalar field together with its input gradient.
struct ValueGrad {
  double value = 0.0;
  GradVector grad;
};

/// Differentiable scalar field x -> (value, input gradient). The currency
/// between attacks, curvature probes and losses.
using ScalarFn = std::function<ValueGrad(const Tensor&)>;

}
