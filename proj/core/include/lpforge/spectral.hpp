#pragma once

#include <cstdint>

#include "lpforge/tensor.hpp"

namespace lpforge {

/// Extreme input-Hessian eigenvalues estimated by power iteration on
/// finite-difference Hessian-vector products. The estimate is valid only when
/// residual <= the tolerance it was run with.
struct SpectralEstimate {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  int iterations_used = 0;
  double residual = 0.0;  // max over both extremes of ||Hv - lambda v|| / ||v||
  bool converged = false;
};

/// Central-difference Hessian-vector product:
///   (grad f(x + h u) - grad f(x - h u)) * ||v||_2 / (2 h),  u = v / ||v||_2.
/// Exact on quadratics up to roundoff. Zero v raises std::domain_error.
GradVector hvp(const ScalarFn& f, const Tensor& x, const GradVector& v, double h = 1e-5);

/// Power iteration for the dominant eigenvalue, then a shifted pass for the
/// opposite extreme. Non-convergence is reported through the residual, not an
/// exception.
SpectralEstimate extreme_eigs(const ScalarFn& f, const Tensor& x, int max_iter, double tol,
                              double fd_step = 1e-5, std::uint64_t seed = 7);

/// Spectral norm ||H|| = max(|lambda_max|, |lambda_min|).
double spectral_norm(const SpectralEstimate& est);

}  // namespace lpforge
