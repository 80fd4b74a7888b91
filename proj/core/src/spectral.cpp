#include "lpforge/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "lpforge/norms.hpp"
#include "lpforge/rng.hpp"

namespace lpforge {

GradVector hvp(const ScalarFn& f, const Tensor& x, const GradVector& v, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("hvp: step must be positive");
  double vnorm = l2_norm(v);
  if (vnorm == 0.0) throw std::domain_error("hvp: zero direction");
  if (v.dim() != x.numel()) throw std::invalid_argument("hvp: direction/point dimension mismatch");

  Tensor xp = x, xm = x;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    double step = h * v[i] / vnorm;
    xp.data[i] += step;
    xm.data[i] -= step;
  }
  GradVector gp = f(xp).grad;
  GradVector gm = f(xm).grad;
  GradVector out(v.dim());
  double scale = vnorm / (2.0 * h);
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = (gp[i] - gm[i]) * scale;
  return out;
}

namespace {

struct PowerResult {
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on op(v); op must be symmetric. Returns the dominant
// (largest-magnitude) eigenvalue via the Rayleigh quotient.
template <typename OpFn>
PowerResult power_iterate(OpFn&& op, std::size_t dim, int max_iter, double tol, RngStream& rng) {
  GradVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = rng.normal();
  double n = l2_norm(v);
  for (std::size_t i = 0; i < dim; ++i) v[i] /= n;

  PowerResult res;
  for (int it = 1; it <= max_iter; ++it) {
    GradVector w = op(v);
    double lambda = dot(v, w);
    double resid = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double r = w[i] - lambda * v[i];
      resid += r * r;
    }
    resid = std::sqrt(resid);
    res.lambda = lambda;
    res.residual = resid;
    res.iterations = it;
    if (resid <= tol) {
      res.converged = true;
      return res;
    }
    double wn = l2_norm(w);
    if (wn == 0.0) {
      // operator annihilates v: eigenvalue 0 with residual ||0 - 0 v|| = 0
      res.lambda = 0.0;
      res.residual = 0.0;
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
  }
  return res;
}

}  // namespace

SpectralEstimate extreme_eigs(const ScalarFn& f, const Tensor& x, int max_iter, double tol,
                              double fd_step, std::uint64_t seed) {
  if (max_iter < 1) throw std::invalid_argument("extreme_eigs: max_iter must be >= 1");
  std::size_t dim = x.numel();

  auto apply_h = [&](const GradVector& v) { return hvp(f, x, v, fd_step); };

  RngStream rng_a(seed, "power-dominant");
  PowerResult dom = power_iterate(apply_h, dim, max_iter, tol, rng_a);

  // Shift by the dominant eigenvalue; the dominant eigenvalue of (H - s I)
  // recovers the spectrum's opposite end.
  double shift = dom.lambda;
  auto apply_shifted = [&](const GradVector& v) {
    GradVector w = apply_h(v);
    for (std::size_t i = 0; i < dim; ++i) w[i] -= shift * v[i];
    return w;
  };
  RngStream rng_b(seed, "power-opposite");
  PowerResult opp = power_iterate(apply_shifted, dim, max_iter, tol, rng_b);
  double lambda_opp = opp.lambda + shift;

  SpectralEstimate est;
  est.lambda_max = std::max(dom.lambda, lambda_opp);
  est.lambda_min = std::min(dom.lambda, lambda_opp);
  est.iterations_used = dom.iterations + opp.iterations;
  est.residual = std::max(dom.residual, opp.residual);
  est.converged = dom.converged && opp.converged;
  return est;
}

double spectral_norm(const SpectralEstimate& est) {
  return std::max(std::fabs(est.lambda_max), std::fabs(est.lambda_min));
}

}  // namespace lpforge
