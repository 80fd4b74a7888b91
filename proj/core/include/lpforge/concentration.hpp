#pragma once

#include <optional>
#include <span>
#include <string>

#include "lpforge/rng.hpp"
#include "lpforge/tensor.hpp"

namespace lpforge::concentration {

/// Per-gradient concentration statistics and the adaptive-norm decision.
/// Serialises to a flat JSON object with exactly these field names.
struct ConcentrationReport {
  std::size_t d = 0;
  double pr = 0.0;       // quartic participation ratio
  double pr1 = 0.0;      // sign-vector participation ratio
  double h = 0.0;        // Shannon entropy, nats
  double h_m = 0.0;      // logarithmic mean entropy, nats
  double delta_h = 0.0;  // h_m - h, >= 0 by Jensen
  double cos2inf = 0.0;  // sqrt(pr1 / d)
  double q_star = 2.0;
  double p_star = 2.0;
  double tau = 0.0;
  bool degenerate_gap = false;  // delta_h below 1e-15: clamped to q_max

  std::string to_json_string() const;
};

/// Adaptive-norm policy. Exactly one of alpha/beta drives the barrier:
///   alpha: tau = (1 + alpha) cos(theta_2inf)
///   beta:  tau = cos((1 - beta) theta_2inf)
struct AdaptPolicy {
  std::optional<double> alpha;
  std::optional<double> beta;
  double q_min = 1.01;
  double q_max = 2.0;
  double soften = 1e-12;

  void validate() const;
  static AdaptPolicy with_beta(double beta, double q_min = 1.01, double q_max = 2.0,
                               double soften = 1e-12);
  static AdaptPolicy with_alpha(double alpha, double q_min = 1.01, double q_max = 2.0,
                                double soften = 1e-12);
};

/// (sum v_i^2)^2 / sum v_i^4, between 1 and d for non-null vectors.
double participation_ratio(const GradVector& v);

/// (||v||_1 / ||v||_2)^2.
double pr1(const GradVector& v);

struct Entropies {
  double h = 0.0;
  double h_m = 0.0;
  double delta_h = 0.0;
};

/// Plug-in entropies of rho_i = (|v_i| + soften) / sum(|v_j| + soften).
/// With soften = 0 an exact zero component makes h_m diverge; softened rho is
/// what the selector consumes.
Entropies entropies(const GradVector& v, double soften);

/// Exact cosine between the l2- and lp-optimal one-step perturbations:
///   ||v||_q^q / (||v||_2 ||v||_{2(q-1)}^{q-1}),  q in (1, 2].
/// q = 1 evaluates the l-inf limit ||v||_1 / (||v||_2 sqrt(d)).
double cos_2p_exact(const GradVector& v, double q);

/// First-order expansion sqrt(pr1/d) (1 + (q-1) delta_h), softened entropies.
double cos_2p_taylor(const GradVector& v, double q, double soften);

struct Selection {
  double q_star = 2.0;
  double p_star = 2.0;
  double tau = 0.0;
  ConcentrationReport report;
};

/// Adaptive dual exponent: raw q = 1 + (tau sqrt(d/pr1) - 1) / delta_h,
/// clamped to [q_min, q_max]. A vanishing entropy gap selects q_max (the
/// safest norm) and flags the report.
Selection select_q(const GradVector& v, const AdaptPolicy& policy);

ConcentrationReport report_for(const GradVector& v, const AdaptPolicy& policy);

struct Lemma1Result {
  double lhs_mean = 0.0;   // E[ ||g+eta||_1 / ||g+eta||_2 ]
  double rhs = 0.0;        // ||g||_1 / ||g||_2
  double margin = 0.0;     // lhs_mean - rhs
  double std_error = 0.0;  // standard error of the Monte-Carlo mean
};

/// Monte-Carlo probe of noise-induced alignment with eta ~ U[-M, M]^d.
/// g is normalised to unit l2 internally.
Lemma1Result lemma1_mc_check(const GradVector& g, double noise_bound, int trials, RngStream& rng);

/// True iff cos_2p_exact(v, q) >= cos2inf - 1e-10 for every q in the grid.
bool lemma2_check(const GradVector& v, std::span<const double> q_grid);

}  // namespace lpforge::concentration
