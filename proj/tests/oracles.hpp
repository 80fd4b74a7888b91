#pragma once

// Test-only oracles, independent of the library code paths they check:
// central finite differences, a dense finite-difference Hessian with a Jacobi
// eigensolver, and closed-form quadratic losses.

#include <cmath>
#include <functional>
#include <vector>

#include "lpforge/tensor.hpp"

namespace oracles {

using lpforge::GradVector;
using lpforge::ScalarFn;
using lpforge::Tensor;
using lpforge::ValueGrad;

inline GradVector fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                              double h = 1e-5) {
  GradVector g(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    Tensor xp = x, xm = x;
    xp.data[i] += h;
    xm.data[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Dense Hessian column-by-column from finite differences of gradients.
inline std::vector<std::vector<double>> fd_dense_hessian(const ScalarFn& f, const Tensor& x,
                                                         double h = 1e-4) {
  std::size_t d = x.numel();
  std::vector<std::vector<double>> hess(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    Tensor xp = x, xm = x;
    xp.data[j] += h;
    xm.data[j] -= h;
    GradVector gp = f(xp).grad;
    GradVector gm = f(xm).grad;
    for (std::size_t i = 0; i < d; ++i) hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
  }
  // symmetrise against finite-difference noise
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      double s = 0.5 * (hess[i][j] + hess[j][i]);
      hess[i][j] = hess[j][i] = s;
    }
  return hess;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix (d <= 32 use only).
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a,
                                              int sweeps = 64) {
  std::size_t n = a.size();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a[p][q]) < 1e-300) continue;
        double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - sn * akq;
          a[k][q] = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - sn * aqk;
          a[q][k] = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
  return eig;
}

// Quadratic loss 0.5 x^T diag(lam) x + b^T x with exact gradients.
inline ScalarFn diag_quadratic(std::vector<double> lam, std::vector<double> b = {}) {
  return [lam = std::move(lam), b = std::move(b)](const Tensor& x) {
    ValueGrad out;
    out.grad = GradVector(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) {
      double bi = i < b.size() ? b[i] : 0.0;
      out.value += 0.5 * lam[i] * x.data[i] * x.data[i] + bi * x.data[i];
      out.grad[i] = lam[i] * x.data[i] + bi;
    }
    return out;
  };
}

}  // namespace oracles
