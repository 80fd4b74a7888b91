#pragma once

#include <array>
#include <optional>
#include <string>

#include "lpforge/norms.hpp"
#include "lpforge/rng.hpp"
#include "lpforge/tensor.hpp"

namespace lpforge::perturb {

enum class NoiseMode { None, AugmentInput, InitBoundary, Both };

/// Radius, norm order and softening for a single-step or fixed-point attack.
/// Finite orders require p >= 2 (dual q in (1,2]); the infinity sentinel has
/// q = 1. Orders in (1,2) are rejected, not extrapolated.
struct PerturbSpec {
  double epsilon = 8.0 / 255.0;
  NormParam norm = NormParam::inf();
  double soften = 1e-12;
  NoiseMode noise_mode = NoiseMode::None;
  std::optional<std::array<double, 2>> clip_domain;

  double q() const { return norm.dual_q(); }
  void validate() const;

  static PerturbSpec lp(double epsilon, double p, double soften = 1e-12);
  static PerturbSpec linf(double epsilon, double soften = 1e-12);
};

struct Perturbation {
  GradVector delta;
  double achieved_norm = 0.0;  // under the spec's norm
  int iterations = 1;
  bool converged = true;
  bool null_gradient = false;
};

/// PGD evaluation attack parameters. step_size <= 0 selects the default
/// 2 epsilon / steps. The first restart starts from delta = 0 so a one-step
/// l-inf run with step_size = epsilon reproduces FGSM exactly.
struct AttackSpec {
  std::string name = "pgd";
  int steps = 20;
  int restarts = 2;
  double step_size = 0.0;
  NormParam norm = NormParam::inf();
  double epsilon = 8.0 / 255.0;
  std::optional<std::array<double, 2>> clip_domain;
  bool zero_init_first_restart = true;

  double effective_step() const;
  void validate() const;
};

/// delta = eps sign(g), with sign(0) = 0.
Perturbation fgsm(const GradVector& g, double eps);

/// One fixed-point application: softened magnitudes gbar = soften + |g|,
///   delta_i = eps sign(g_i) (gbar_i / ||gbar||_q)^(q-1).
/// q = 1 reproduces FGSM; q = 2 is the normalised gradient. Components with
/// sign(g_i) = 0 stay zero (the achieved norm then falls below eps; recorded,
/// not an error).
Perturbation lp_step(const GradVector& g, const PerturbSpec& spec);

/// Transition filter: Upsilon_i = (|g_i| / ||g||_q)^(q-1), values in [0,1].
GradVector upsilon(const GradVector& g, double q);

/// Iterate delta <- F_p(delta) from zero (or boundary-projected noise when
/// noise_mode = InitBoundary/Both) until the l2 move falls below tol * eps.
/// `iterations` counts applications that moved the iterate.
Perturbation fixed_point_solve(const ScalarFn& loss_at, const Tensor& x0, const PerturbSpec& spec,
                               int max_iter = 50, double tol = 1e-6, RngStream* noise_rng = nullptr);

/// eta ~ U[-eps,eps]^d, then delta = clip_box(eta + eps sign(grad(x0+eta))).
Perturbation rs_fgsm(const ScalarFn& loss_at, const Tensor& x0, const PerturbSpec& spec,
                     RngStream& rng);

struct NoisePlacement {
  Tensor x_used;      // gradient evaluation point (input augmentation)
  GradVector delta0;  // initial perturbation (boundary projection)
};

/// Appendix-style dual noise placement; Both reuses one draw for both roles.
NoisePlacement noise_placement(const Tensor& x0, const PerturbSpec& spec, RngStream& rng);

struct PgdResult {
  Perturbation perturbation;
  double max_loss = 0.0;
};

PgdResult pgd_attack(const ScalarFn& loss_at, const Tensor& x0, const AttackSpec& atk,
                     RngStream& rng);

/// Steepest-ascent step direction under the attack norm: the unit-radius
/// lp_step of the gradient (sign for l-inf, g/||g||_2 for l2).
GradVector pgd_step_direction(const GradVector& g, const NormParam& norm);

/// Project delta into the norm ball: box clip for l-inf, radial rescale
/// otherwise (applied only when the norm exceeds eps).
void project_to_ball(GradVector& delta, const NormParam& norm, double eps);

/// Contraction constant K = 2 eps ||hessian|| / ||grad(x0)||_2; the operator
/// norm is taken spectrally via power iteration.
double lipschitz_K(const ScalarFn& loss_at, const Tensor& x0, double eps, int eig_max_iter = 300,
                   double eig_tol = 1e-9);

/// Cosine between grad(x0) and grad(x0 + eps grad(x0)/||grad(x0)||_2).
double grad_align_cos(const ScalarFn& loss_at, const Tensor& x0, double eps);

}  // namespace lpforge::perturb
