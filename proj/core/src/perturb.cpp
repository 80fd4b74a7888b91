#include "lpforge/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lpforge/spectral.hpp"

namespace lpforge::perturb {

void PerturbSpec::validate() const {
  // epsilon = 0 is the degenerate radius: every attack collapses to delta = 0
  if (!(epsilon >= 0.0)) throw std::invalid_argument("PerturbSpec: epsilon must be non-negative");
  if (!(soften >= 0.0)) throw std::invalid_argument("PerturbSpec: soften must be non-negative");
  if (!norm.is_inf() && norm.p() < 2.0)
    throw std::invalid_argument("PerturbSpec: finite norm order must satisfy p >= 2");
  if (clip_domain && !((*clip_domain)[0] < (*clip_domain)[1]))
    throw std::invalid_argument("PerturbSpec: empty clip domain");
}

PerturbSpec PerturbSpec::lp(double epsilon, double p, double soften) {
  PerturbSpec s;
  s.epsilon = epsilon;
  s.norm = NormParam::finite(p);
  s.soften = soften;
  s.validate();
  return s;
}

PerturbSpec PerturbSpec::linf(double epsilon, double soften) {
  PerturbSpec s;
  s.epsilon = epsilon;
  s.norm = NormParam::inf();
  s.soften = soften;
  s.validate();
  return s;
}

double AttackSpec::effective_step() const {
  return step_size > 0.0 ? step_size : 2.0 * epsilon / static_cast<double>(steps);
}

void AttackSpec::validate() const {
  if (steps < 1) throw std::invalid_argument("AttackSpec: steps must be >= 1");
  if (restarts < 1) throw std::invalid_argument("AttackSpec: restarts must be >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("AttackSpec: epsilon must be non-negative");
  if (!norm.is_inf() && norm.p() < 2.0)
    throw std::invalid_argument("AttackSpec: finite norm order must satisfy p >= 2");
}

Perturbation fgsm(const GradVector& g, double eps) {
  Perturbation out;
  out.delta = GradVector(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) out.delta[i] = eps * sign(g[i]);
  out.null_gradient = g.all_zero();
  out.achieved_norm = g.dim() ? linf_norm(out.delta) : 0.0;
  return out;
}

Perturbation lp_step(const GradVector& g, const PerturbSpec& spec) {
  spec.validate();
  if (!g.all_finite()) throw std::domain_error("lp_step: non-finite gradient");
  double q = spec.q();
  Perturbation out;
  out.null_gradient = g.all_zero();
  out.delta = GradVector(g.dim());

  if (q == 1.0) {
    // infinity norm: the filter exponent q-1 vanishes and only the sign acts
    for (std::size_t i = 0; i < g.dim(); ++i) out.delta[i] = spec.epsilon * sign(g[i]);
  } else {
    GradVector softened(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) softened[i] = spec.soften + std::fabs(g[i]);
    double qn = lp_norm(softened, q);
    if (qn == 0.0) {
      // zero gradient and zero softening: pure degenerate case
      out.achieved_norm = 0.0;
      return out;
    }
    double e = q - 1.0;
    if (e == 1.0) {
      for (std::size_t i = 0; i < g.dim(); ++i)
        out.delta[i] = spec.epsilon * sign(g[i]) * (softened[i] / qn);
    } else {
      for (std::size_t i = 0; i < g.dim(); ++i)
        out.delta[i] = spec.epsilon * sign(g[i]) * std::pow(softened[i] / qn, e);
    }
  }
  out.achieved_norm = g.dim() ? lp_norm(out.delta, spec.norm) : 0.0;
  return out;
}

GradVector upsilon(const GradVector& g, double q) {
  if (!(q > 1.0 && q <= 2.0)) throw std::invalid_argument("upsilon: q must lie in (1, 2]");
  if (g.all_zero()) throw std::domain_error("upsilon: zero gradient");
  double qn = lp_norm(g, q);
  GradVector out(g.dim());
  double e = q - 1.0;
  for (std::size_t i = 0; i < g.dim(); ++i) out[i] = std::pow(std::fabs(g[i]) / qn, e);
  return out;
}

Perturbation fixed_point_solve(const ScalarFn& loss_at, const Tensor& x0, const PerturbSpec& spec,
                               int max_iter, double tol, RngStream* noise_rng) {
  spec.validate();
  if (max_iter < 1) throw std::invalid_argument("fixed_point_solve: max_iter must be >= 1");

  std::size_t d = x0.numel();
  GradVector delta(d);
  if (spec.noise_mode == NoiseMode::InitBoundary || spec.noise_mode == NoiseMode::Both) {
    if (!noise_rng)
      throw std::invalid_argument("fixed_point_solve: noise_mode requires an RNG stream");
    delta = noise_placement(x0, spec, *noise_rng).delta0;
  }

  Perturbation out;
  out.converged = false;
  out.iterations = 0;
  double threshold = tol * spec.epsilon;
  Tensor x = x0;
  for (int k = 1; k <= max_iter; ++k) {
    for (std::size_t i = 0; i < d; ++i) x.data[i] = x0.data[i] + delta[i];
    ValueGrad vg = loss_at(x);
    for (double gi : vg.grad.values)
      if (std::isnan(gi))
        throw std::runtime_error("fixed_point_solve: NaN gradient at iterate " +
                                 std::to_string(k));
    Perturbation step = lp_step(vg.grad, spec);
    double move = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double r = step.delta[i] - delta[i];
      move += r * r;
    }
    move = std::sqrt(move);
    delta = step.delta;
    out.null_gradient = step.null_gradient;
    if (move <= threshold) {
      out.converged = true;
      break;
    }
    out.iterations = k;
  }
  out.delta = delta;
  out.achieved_norm = lp_norm(out.delta, spec.norm);
  return out;
}

Perturbation rs_fgsm(const ScalarFn& loss_at, const Tensor& x0, const PerturbSpec& spec,
                     RngStream& rng) {
  spec.validate();
  if (!spec.norm.is_inf()) throw std::invalid_argument("rs_fgsm: requires the l-inf norm");
  std::size_t d = x0.numel();
  double eps = spec.epsilon;

  GradVector eta(d);
  Tensor x = x0;
  for (std::size_t i = 0; i < d; ++i) {
    eta[i] = rng.uniform(-eps, eps);
    x.data[i] += eta[i];
  }
  GradVector g = loss_at(x).grad;

  Perturbation out;
  out.null_gradient = g.all_zero();
  out.delta = GradVector(d);
  for (std::size_t i = 0; i < d; ++i)
    out.delta[i] = std::clamp(eta[i] + eps * sign(g[i]), -eps, eps);
  out.achieved_norm = linf_norm(out.delta);
  return out;
}

NoisePlacement noise_placement(const Tensor& x0, const PerturbSpec& spec, RngStream& rng) {
  spec.validate();
  if (spec.noise_mode == NoiseMode::None)
    throw std::invalid_argument("noise_placement: noise_mode is none");
  std::size_t d = x0.numel();
  double eps = spec.epsilon;

  GradVector eta(d);
  for (std::size_t i = 0; i < d; ++i) eta[i] = rng.uniform(-eps, eps);

  NoisePlacement out;
  out.x_used = x0;
  out.delta0 = GradVector(d);

  bool augment =
      spec.noise_mode == NoiseMode::AugmentInput || spec.noise_mode == NoiseMode::Both;
  bool boundary =
      spec.noise_mode == NoiseMode::InitBoundary || spec.noise_mode == NoiseMode::Both;

  if (augment)
    for (std::size_t i = 0; i < d; ++i) out.x_used.data[i] += eta[i];

  if (boundary) {
    double n = lp_norm(eta, spec.norm);
    if (n > 0.0) {
      double scale = eps / n;
      for (std::size_t i = 0; i < d; ++i) out.delta0[i] = eta[i] * scale;
    }
  }
  return out;
}

GradVector pgd_step_direction(const GradVector& g, const NormParam& norm) {
  PerturbSpec unit;
  unit.epsilon = 1.0;
  unit.norm = norm;
  unit.soften = 0.0;
  return lp_step(g, unit).delta;
}

void project_to_ball(GradVector& delta, const NormParam& norm, double eps) {
  if (norm.is_inf()) {
    for (auto& v : delta.values) v = std::clamp(v, -eps, eps);
    return;
  }
  double n = lp_norm(delta, norm);
  if (n > eps) {
    double scale = eps / n;
    for (auto& v : delta.values) v *= scale;
  }
}

PgdResult pgd_attack(const ScalarFn& loss_at, const Tensor& x0, const AttackSpec& atk,
                     RngStream& rng) {
  atk.validate();
  std::size_t d = x0.numel();
  double eps = atk.epsilon;
  double mu = atk.effective_step();

  PgdResult best;
  best.max_loss = -std::numeric_limits<double>::infinity();

  Tensor x = x0;
  for (int r = 0; r < atk.restarts; ++r) {
    GradVector delta(d);
    if (!(r == 0 && atk.zero_init_first_restart)) {
      if (atk.norm.is_inf()) {
        for (std::size_t i = 0; i < d; ++i) delta[i] = rng.uniform(-eps, eps);
      } else {
        // random direction, radius eps * u^(1/d): inside the ball
        for (std::size_t i = 0; i < d; ++i) delta[i] = rng.uniform(-1.0, 1.0);
        double n = lp_norm(delta, atk.norm);
        double radius = eps * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
        if (n > 0.0)
          for (std::size_t i = 0; i < d; ++i) delta[i] *= radius / n;
      }
      if (atk.clip_domain) {
        auto [lo, hi] = *atk.clip_domain;
        for (std::size_t i = 0; i < d; ++i)
          delta[i] = std::clamp(x0.data[i] + delta[i], lo, hi) - x0.data[i];
      }
    }

    for (int k = 0; k < atk.steps; ++k) {
      for (std::size_t i = 0; i < d; ++i) x.data[i] = x0.data[i] + delta[i];
      GradVector g = loss_at(x).grad;
      GradVector dir = pgd_step_direction(g, atk.norm);
      for (std::size_t i = 0; i < d; ++i) delta[i] += mu * dir[i];
      project_to_ball(delta, atk.norm, eps);
      if (atk.clip_domain) {
        auto [lo, hi] = *atk.clip_domain;
        for (std::size_t i = 0; i < d; ++i)
          delta[i] = std::clamp(x0.data[i] + delta[i], lo, hi) - x0.data[i];
      }
    }

    for (std::size_t i = 0; i < d; ++i) x.data[i] = x0.data[i] + delta[i];
    double loss = loss_at(x).value;
    if (loss > best.max_loss) {
      best.max_loss = loss;
      best.perturbation.delta = delta;
    }
  }

  best.perturbation.iterations = atk.steps;
  best.perturbation.converged = true;
  best.perturbation.achieved_norm = lp_norm(best.perturbation.delta, atk.norm);
  best.perturbation.null_gradient = best.perturbation.delta.all_zero();
  return best;
}

double lipschitz_K(const ScalarFn& loss_at, const Tensor& x0, double eps, int eig_max_iter,
                   double eig_tol) {
  double gnorm = l2_norm(loss_at(x0).grad);
  if (gnorm == 0.0) throw std::domain_error("lipschitz_K: zero gradient at x0");
  SpectralEstimate est = extreme_eigs(loss_at, x0, eig_max_iter, eig_tol);
  return 2.0 * eps * spectral_norm(est) / gnorm;
}

double grad_align_cos(const ScalarFn& loss_at, const Tensor& x0, double eps) {
  GradVector g0 = loss_at(x0).grad;
  double n0 = l2_norm(g0);
  if (n0 == 0.0) throw std::domain_error("grad_align_cos: zero gradient at x0");
  Tensor x1 = x0;
  for (std::size_t i = 0; i < g0.dim(); ++i) x1.data[i] += eps * g0[i] / n0;
  GradVector g1 = loss_at(x1).grad;
  double n1 = l2_norm(g1);
  if (n1 == 0.0) throw std::domain_error("grad_align_cos: zero gradient at probe point");
  return std::clamp(dot(g0, g1) / (n0 * n1), -1.0, 1.0);
}

}  // namespace lpforge::perturb
