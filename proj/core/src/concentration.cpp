#include "lpforge/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "lpforge/norms.hpp"

namespace lpforge::concentration {

namespace {

double max_abs(const GradVector& v) {
  double m = 0.0;
  for (double x : v.values) m = std::max(m, std::fabs(x));
  return m;
}

void require_nonzero(const GradVector& v, const char* what) {
  if (v.dim() == 0 || v.all_zero()) throw std::domain_error(std::string(what) + ": zero vector");
}

}  // namespace

std::string ConcentrationReport::to_json_string() const {
  nlohmann::json j;
  j["d"] = d;
  j["pr"] = pr;
  j["pr1"] = pr1;
  j["h"] = h;
  j["h_m"] = h_m;
  j["delta_h"] = delta_h;
  j["cos2inf"] = cos2inf;
  j["q_star"] = q_star;
  j["p_star"] = p_star;
  j["tau"] = tau;
  j["degenerate_gap"] = degenerate_gap;
  return j.dump();
}

void AdaptPolicy::validate() const {
  if (alpha.has_value() == beta.has_value())
    throw std::invalid_argument("AdaptPolicy: exactly one of alpha/beta must be set");
  if (alpha && *alpha < 0.0) throw std::invalid_argument("AdaptPolicy: alpha must be >= 0");
  if (beta && *beta < 0.0) throw std::invalid_argument("AdaptPolicy: beta must be >= 0");
  if (!(q_min > 1.0)) throw std::invalid_argument("AdaptPolicy: q_min must exceed 1");
  if (!(q_max <= 2.0)) throw std::invalid_argument("AdaptPolicy: q_max must be <= 2");
  if (!(q_min < q_max)) throw std::invalid_argument("AdaptPolicy: q_min must be < q_max");
  if (!(soften >= 0.0)) throw std::invalid_argument("AdaptPolicy: soften must be >= 0");
}

AdaptPolicy AdaptPolicy::with_beta(double beta, double q_min, double q_max, double soften) {
  AdaptPolicy p;
  p.beta = beta;
  p.q_min = q_min;
  p.q_max = q_max;
  p.soften = soften;
  p.validate();
  return p;
}

AdaptPolicy AdaptPolicy::with_alpha(double alpha, double q_min, double q_max, double soften) {
  AdaptPolicy p;
  p.alpha = alpha;
  p.q_min = q_min;
  p.q_max = q_max;
  p.soften = soften;
  p.validate();
  return p;
}

double participation_ratio(const GradVector& v) {
  require_nonzero(v, "participation_ratio");
  double m = max_abs(v);
  double s2 = 0.0, s4 = 0.0;
  for (double x : v.values) {
    double r = x / m;
    double r2 = r * r;
    s2 += r2;
    s4 += r2 * r2;
  }
  return s2 * s2 / s4;
}

double pr1(const GradVector& v) {
  require_nonzero(v, "pr1");
  double m = max_abs(v);
  double s1 = 0.0, s2 = 0.0;
  for (double x : v.values) {
    double r = std::fabs(x) / m;
    s1 += r;
    s2 += r * r;
  }
  return s1 * s1 / s2;
}

Entropies entropies(const GradVector& v, double soften) {
  if (v.dim() == 0) throw std::domain_error("entropies: empty vector");
  if (!(soften >= 0.0)) throw std::invalid_argument("entropies: soften must be >= 0");
  double total = 0.0;
  for (double x : v.values) total += std::fabs(x) + soften;
  if (total <= 0.0) throw std::domain_error("entropies: zero mass after softening");

  double d = static_cast<double>(v.dim());
  Entropies out;
  for (double x : v.values) {
    double rho = (std::fabs(x) + soften) / total;
    double lg = std::log(rho);  // -inf when rho is exactly zero: h_m diverges
    if (rho > 0.0) out.h -= rho * lg;
    out.h_m -= lg / d;
  }
  out.delta_h = out.h_m - out.h;
  return out;
}

double cos_2p_exact(const GradVector& v, double q) {
  require_nonzero(v, "cos_2p_exact");
  if (!(q >= 1.0 && q <= 2.0)) throw std::invalid_argument("cos_2p_exact: q must lie in [1, 2]");
  double m = max_abs(v);
  GradVector w(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) w[i] = std::fabs(v[i]) / m;

  double l2 = l2_norm(w);
  if (q == 1.0) {
    // l-inf limit: the zero-norm term tends to d
    double l1 = 0.0;
    for (double x : w.values) l1 += x;
    return l1 / (l2 * std::sqrt(static_cast<double>(v.dim())));
  }
  double num = abs_pow_sum(w, q);
  double den = l2 * std::sqrt(abs_pow_sum(w, 2.0 * (q - 1.0)));
  return num / den;
}

double cos_2p_taylor(const GradVector& v, double q, double soften) {
  require_nonzero(v, "cos_2p_taylor");
  if (!(q >= 1.0 && q <= 2.0)) throw std::invalid_argument("cos_2p_taylor: q must lie in [1, 2]");
  double ratio = pr1(v) / static_cast<double>(v.dim());
  Entropies e = entropies(v, soften);
  return std::sqrt(ratio) * (1.0 + (q - 1.0) * e.delta_h);
}

Selection select_q(const GradVector& v, const AdaptPolicy& policy) {
  policy.validate();
  require_nonzero(v, "select_q");

  ConcentrationReport rep;
  rep.d = v.dim();
  rep.pr = participation_ratio(v);
  rep.pr1 = pr1(v);
  Entropies e = entropies(v, policy.soften);
  rep.h = e.h;
  rep.h_m = e.h_m;
  rep.delta_h = e.delta_h;
  rep.cos2inf = std::sqrt(rep.pr1 / static_cast<double>(rep.d));

  double tau;
  if (policy.alpha) {
    tau = (1.0 + *policy.alpha) * rep.cos2inf;
  } else {
    double theta = std::acos(std::clamp(rep.cos2inf, -1.0, 1.0));
    tau = std::cos((1.0 - *policy.beta) * theta);
  }
  rep.tau = tau;

  double q_star;
  double excess = tau * std::sqrt(static_cast<double>(rep.d) / rep.pr1) - 1.0;
  if (excess <= 0.0) {
    // the barrier already holds at q -> 1: the most aggressive allowed norm
    q_star = policy.q_min;
  } else if (!(e.delta_h > 1e-15)) {
    // barrier unmet but the entropy gap vanishes: the expansion cannot price
    // the required q, fall back to the safest norm
    q_star = policy.q_max;
    rep.degenerate_gap = true;
  } else {
    double raw = 1.0 + excess / e.delta_h;
    q_star = std::clamp(raw, policy.q_min, policy.q_max);
  }
  rep.q_star = q_star;
  rep.p_star = q_star / (q_star - 1.0);

  Selection sel;
  sel.q_star = rep.q_star;
  sel.p_star = rep.p_star;
  sel.tau = rep.tau;
  sel.report = rep;
  return sel;
}

ConcentrationReport report_for(const GradVector& v, const AdaptPolicy& policy) {
  return select_q(v, policy).report;
}

Lemma1Result lemma1_mc_check(const GradVector& g, double noise_bound, int trials,
                             RngStream& rng) {
  require_nonzero(g, "lemma1_mc_check");
  if (!(noise_bound > 0.0)) throw std::invalid_argument("lemma1_mc_check: M must be positive");
  if (trials < 2) throw std::invalid_argument("lemma1_mc_check: needs at least 2 trials");

  GradVector unit = g;
  double n2 = l2_norm(unit);
  for (auto& x : unit.values) x /= n2;

  Lemma1Result out;
  out.rhs = l1_norm(unit);  // ||g||_1 / ||g||_2 of the normalised gradient

  // Welford: the per-trial spread can sit ten orders below the mean, a
  // naive sum-of-squares cancels to zero there
  double mean = 0.0, m2 = 0.0;
  std::size_t d = unit.dim();
  for (int t = 0; t < trials; ++t) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double x = unit[i] + rng.uniform(-noise_bound, noise_bound);
      s1 += std::fabs(x);
      s2 += x * x;
    }
    double ratio = s1 / std::sqrt(s2);
    double delta = ratio - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (ratio - mean);
  }
  double n = static_cast<double>(trials);
  out.lhs_mean = mean;
  out.std_error = std::sqrt(m2 / (n - 1.0) / n);
  out.margin = out.lhs_mean - out.rhs;
  return out;
}

bool lemma2_check(const GradVector& v, std::span<const double> q_grid) {
  require_nonzero(v, "lemma2_check");
  double floor = std::sqrt(pr1(v) / static_cast<double>(v.dim())) - 1e-10;
  for (double q : q_grid)
    if (cos_2p_exact(v, q) < floor) return false;
  return true;
}

}  // namespace lpforge::concentration
