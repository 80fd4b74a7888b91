#include "lpforge/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lpforge {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("Tensor: shape product does not match buffer length");
}

Tensor Tensor::vector(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape); }

std::size_t Tensor::rows() const {
  if (shape.size() != 2) throw std::invalid_argument("Tensor::rows: not 2-D");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) throw std::invalid_argument("Tensor::cols: not 2-D");
  return shape[1];
}

double& Tensor::at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }

double Tensor::at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::check_shape_matches(const Tensor& other, const char* what) const {
  if (shape != other.shape) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

bool GradVector::all_finite() const {
  for (double x : values)
    if (!std::isfinite(x)) return false;
  return true;
}

bool GradVector::all_zero() const {
  for (double x : values)
    if (x != 0.0) return false;
  return true;
}

GradVector flatten(const Tensor& t) { return GradVector(t.data); }

Tensor to_tensor(const GradVector& v, const std::vector<std::size_t>& shape) {
  return Tensor(shape, v.values);
}

double dot(const GradVector& a, const GradVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

GradVector add_scaled(const GradVector& a, const GradVector& b, double scale) {
  if (a.dim() != b.dim()) throw std::invalid_argument("add_scaled: dimension mismatch");
  GradVector out = a;
  for (std::size_t i = 0; i < b.dim(); ++i) out[i] += scale * b[i];
  return out;
}

}  // namespace lpforge
