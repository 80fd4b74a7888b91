#include "lpforge/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "lpforge/concentration.hpp"
#include "lpforge/model.hpp"
#include "lpforge/norms.hpp"
#include "lpforge/perturb.hpp"
#include "lpforge/rng.hpp"
#include "lpforge/tensor.hpp"

namespace lpforge::verify {

namespace conc = lpforge::concentration;
namespace pt = lpforge::perturb;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& msg) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << msg;
    }
  }
};

GradVector random_gaussian(RngStream& rng, std::size_t d) {
  GradVector v(d);
  for (auto& x : v.values) x = rng.normal();
  return v;
}

// ---- injected variants -----------------------------------------------------

GradVector lp_step_delta(Fault fault, const GradVector& g, const pt::PerturbSpec& spec) {
  if (fault != Fault::LpStepDropExponent) return pt::lp_step(g, spec).delta;
  // broken filter: exponent q-1 dropped
  double q = spec.q();
  GradVector softened(g.dim());
  for (std::size_t i = 0; i < g.dim(); ++i) softened[i] = spec.soften + std::fabs(g[i]);
  double qn = lp_norm(softened, q);
  GradVector delta(g.dim());
  if (qn > 0.0)
    for (std::size_t i = 0; i < g.dim(); ++i)
      delta[i] = spec.epsilon * sign(g[i]) * (softened[i] / qn);
  return delta;
}

double cos_2p_taylor_impl(Fault fault, const GradVector& v, double q, double soften) {
  if (fault != Fault::TaylorNoGap) return conc::cos_2p_taylor(v, q, soften);
  return std::sqrt(conc::pr1(v) / static_cast<double>(v.dim()));
}

double select_q_impl(Fault fault, const GradVector& v, const conc::AdaptPolicy& policy) {
  if (fault != Fault::QstarNoSqrt) return conc::select_q(v, policy).q_star;
  // broken selector: sqrt dropped from the barrier ratio
  double p1 = conc::pr1(v);
  double d = static_cast<double>(v.dim());
  double cos2inf = std::sqrt(p1 / d);
  double tau = policy.alpha ? (1.0 + *policy.alpha) * cos2inf
                            : std::cos((1.0 - *policy.beta) * std::acos(std::clamp(cos2inf, -1.0, 1.0)));
  conc::Entropies e = conc::entropies(v, policy.soften);
  double excess = tau * (d / p1) - 1.0;
  if (excess <= 0.0) return policy.q_min;
  if (!(e.delta_h > 1e-15)) return policy.q_max;
  return std::clamp(1.0 + excess / e.delta_h, policy.q_min, policy.q_max);
}

// ---- suite: norms ----------------------------------------------------------

SuiteResult suite_norms(Fault) {
  Check c;
  // frozen oracle values (arbitrary-precision recomputation of the formulas)
  GradVector v34(std::vector<double>{3.0, 4.0});
  c.expect(std::fabs(lp_norm(v34, 2.0) - 5.0) < 1e-12, "l2(3,4) != 5");
  c.expect(std::fabs(lp_norm(v34, 1.0) - 7.0) < 1e-12, "l1(3,4) != 7");
  c.expect(std::fabs(lp_norm(v34, 4.0 / 3.0) - 5.9063229656488888) < 1e-12,
           "l4/3(3,4) mismatch");
  c.expect(std::fabs(lp_norm(v34, NormParam::inf()) - 4.0) < 1e-15, "linf(3,4) != 4");

  // absolute homogeneity and monotonicity in p over random vectors
  RngStream rng(11, "norms-suite");
  const double orders[] = {1.0, 4.0 / 3.0, 2.0, 4.0, 16.0};
  for (int t = 0; t < 200 && c.ok; ++t) {
    GradVector g = random_gaussian(rng, 1 + static_cast<std::size_t>(rng.next_below(64)));
    double scale = std::exp(rng.uniform(-8.0, 8.0)) * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    GradVector sg = g;
    for (auto& x : sg.values) x *= scale;
    double prev = std::numeric_limits<double>::infinity();
    for (double p : orders) {
      double n = lp_norm(g, p);
      double ns = lp_norm(sg, p);
      c.expect(std::fabs(ns - std::fabs(scale) * n) <= 1e-9 * std::max(1.0, ns),
               "homogeneity violated");
      c.expect(n <= prev * (1.0 + 1e-12), "norm not non-increasing in p");
      prev = n;
    }
    c.expect(lp_norm(g, NormParam::inf()) <= prev * (1.0 + 1e-12), "linf exceeds last finite p");
  }

  // large-p overflow guard: max-factoring must survive p = 1e6
  GradVector big(std::vector<double>{1e200, 5e199});
  c.expect(std::fabs(lp_norm(big, 1e6) - 1e200) < 1e188, "max-factored large-p overflowed");

  SuiteResult r;
  r.name = "norms";
  r.passed = c.ok;
  r.detail = c.ok ? "lp_norm identities, homogeneity, p-monotonicity" : c.detail.str();
  return r;
}

// ---- suite: autodiff (finite-difference oracle) ------------------------------

SuiteResult suite_autodiff(Fault) {
  Check c;
  RngStream rng(23, "autodiff-suite");
  double worst = 0.0;

  for (int inst = 0; inst < 100 && c.ok; ++inst) {
    std::size_t d = 4 + rng.next_below(6);
    std::size_t hid = 5 + rng.next_below(8);
    std::size_t classes = 2 + rng.next_below(3);
    model::ModelParams params =
        model::make_mlp(d, {hid}, classes, inst % 2 == 0 ? model::Activation::Relu
                                                         : model::Activation::GeluApprox,
                        rng.next_u64());
    Tensor x({1, d});
    for (auto& xv : x.data) xv = rng.normal();
    std::vector<int> y{static_cast<int>(rng.next_below(classes))};

    model::LossGrads lg = model::xent_loss_and_grads(params, x, y);

    auto loss_value = [&](const model::ModelParams& p, const Tensor& xx) {
      return model::xent_loss(p, xx, y).first;
    };

    const double h = 1e-5;
    // input gradient vs central differences
    for (std::size_t i = 0; i < d; ++i) {
      Tensor xp = x, xm = x;
      xp.data[i] += h;
      xm.data[i] -= h;
      double fd = (loss_value(params, xp) - loss_value(params, xm)) / (2.0 * h);
      double got = lg.input_grads[0][i];
      double rel = std::fabs(got - fd) / std::max(1e-6, std::fabs(fd));
      worst = std::max(worst, rel);
    }
    // parameter gradients vs central differences
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
      for (std::size_t i = 0; i < params.weights[l].numel(); i += 3) {
        model::ModelParams pp = params, pm = params;
        pp.weights[l].data[i] += h;
        pm.weights[l].data[i] -= h;
        double fd = (loss_value(pp, x) - loss_value(pm, x)) / (2.0 * h);
        double got = lg.weight_grads[l].data[i];
        double rel = std::fabs(got - fd) / std::max(1e-6, std::fabs(fd));
        worst = std::max(worst, rel);
      }
      for (std::size_t i = 0; i < params.biases[l].numel(); ++i) {
        model::ModelParams pp = params, pm = params;
        pp.biases[l].data[i] += h;
        pm.biases[l].data[i] -= h;
        double fd = (loss_value(pp, x) - loss_value(pm, x)) / (2.0 * h);
        double got = lg.bias_grads[l].data[i];
        double rel = std::fabs(got - fd) / std::max(1e-6, std::fabs(fd));
        worst = std::max(worst, rel);
      }
    }
  }
  c.expect(worst < 1e-4, "gradient/finite-difference relative error " + std::to_string(worst));

  SuiteResult r;
  r.name = "autodiff";
  r.passed = c.ok;
  r.detail = c.ok ? "100 random MLPs vs central differences, worst rel err " + std::to_string(worst)
                  : c.detail.str();
  return r;
}

// ---- suite: fixed_point (brute-force constrained maximizer) ------------------

SuiteResult suite_fixed_point(Fault) {
  Check c;
  RngStream rng(31, "fixed-point-suite");
  double worst_angle = 0.0;
  int worst_iters = 0;

  for (int trial = 0; trial < 100 && c.ok; ++trial) {
    std::size_t d = 2 + rng.next_below(9);  // d <= 10
    // random positive-definite quadratic via a random rotation of a diagonal
    std::vector<double> lam(d);
    for (auto& l : lam) l = rng.uniform(0.5, 2.0);
    // Householder rotation Q = I - 2 u u^T
    GradVector u = random_gaussian(rng, d);
    double un = l2_norm(u);
    for (auto& x : u.values) x /= un;
    auto apply_A = [&](const GradVector& z) {
      // A = Q diag(lam) Q^T with Q = I - 2 u u^T
      GradVector t = z;
      double uz = dot(u, z);
      for (std::size_t i = 0; i < d; ++i) t[i] -= 2.0 * uz * u[i];
      for (std::size_t i = 0; i < d; ++i) t[i] *= lam[i];
      double ut = dot(u, t);
      for (std::size_t i = 0; i < d; ++i) t[i] -= 2.0 * ut * u[i];
      return t;
    };
    GradVector x0v = random_gaussian(rng, d);
    GradVector b = random_gaussian(rng, d);
    Tensor x0 = to_tensor(x0v, {d});

    ScalarFn loss = [&](const Tensor& x) {
      GradVector xv = flatten(x);
      GradVector ax = apply_A(xv);
      ValueGrad out;
      out.value = 0.5 * dot(xv, ax) + dot(b, xv);
      out.grad = GradVector(d);
      for (std::size_t i = 0; i < d; ++i) out.grad[i] = ax[i] + b[i];
      return out;
    };

    GradVector g0 = loss(x0).grad;
    double lam_max = *std::max_element(lam.begin(), lam.end());
    double eps = 0.4 * l2_norm(g0) / lam_max;  // K = 2 eps ||A|| / ||g0|| = 0.8 < 1
    if (!(eps > 0.0)) continue;

    pt::PerturbSpec spec = pt::PerturbSpec::lp(eps, 2.0, 0.0);
    pt::Perturbation fp = pt::fixed_point_solve(loss, x0, spec, 50, 1e-9);
    c.expect(fp.converged, "fixed point did not converge with K < 1");
    c.expect(fp.iterations <= 50, "iteration budget exceeded");
    worst_iters = std::max(worst_iters, fp.iterations);

    // independent oracle: dense projected gradient ascent, 1e5 steps
    GradVector delta(d);
    double lr = 0.5 / lam_max;
    for (int k = 0; k < 100000; ++k) {
      GradVector xq(d);
      for (std::size_t i = 0; i < d; ++i) xq[i] = x0v[i] + delta[i];
      GradVector grad = apply_A(xq);
      for (std::size_t i = 0; i < d; ++i) grad[i] += b[i];
      for (std::size_t i = 0; i < d; ++i) delta[i] += lr * grad[i];
      double n = l2_norm(delta);
      if (n > eps)
        for (std::size_t i = 0; i < d; ++i) delta[i] *= eps / n;
    }

    double cosang =
        dot(delta, fp.delta) / std::max(1e-300, l2_norm(delta) * l2_norm(fp.delta));
    double angle = std::acos(std::clamp(cosang, -1.0, 1.0));
    worst_angle = std::max(worst_angle, angle);
    c.expect(angle < 1e-3, "angular gap " + std::to_string(angle) + " rad at trial " +
                               std::to_string(trial));
  }

  SuiteResult r;
  r.name = "fixed_point";
  r.passed = c.ok;
  r.detail = c.ok ? "100 PD quadratics vs projected-ascent oracle, worst angle " +
                        std::to_string(worst_angle) + " rad, max iters " +
                        std::to_string(worst_iters)
                  : c.detail.str();
  return r;
}

// ---- suite: lemma1 (Monte-Carlo noise-induced alignment) ---------------------

SuiteResult suite_lemma1(Fault) {
  Check c;
  const std::size_t d = 100;
  double min_sigmas = std::numeric_limits<double>::infinity();

  for (int t = 0; t < 20 && c.ok; ++t) {
    RngStream grng(41, "lemma1-grad", static_cast<std::uint64_t>(t));
    // concentrated gradient: two dominant spikes over a faint background
    GradVector g(d);
    for (std::size_t i = 0; i < d; ++i)
      g[i] = (i < 2 ? 1.0 : 0.02) * (grng.uniform01() < 0.5 ? -1.0 : 1.0);
    double n2 = l2_norm(g);
    for (auto& x : g.values) x /= n2;
    c.expect(conc::pr1(g) < static_cast<double>(d) / 10.0, "gradient not concentrated enough");

    double M = 0.05 * linf_norm(g);
    RngStream mc(41, "lemma1-mc", static_cast<std::uint64_t>(t));
    conc::Lemma1Result res = conc::lemma1_mc_check(g, M, 100000, mc);
    double sigmas = res.margin / res.std_error;
    min_sigmas = std::min(min_sigmas, sigmas);
    c.expect(sigmas >= 3.0, "margin only " + std::to_string(sigmas) + " standard errors");
  }

  SuiteResult r;
  r.name = "lemma1";
  r.passed = c.ok;
  r.detail = c.ok ? "20 concentrated gradients, min margin " + std::to_string(min_sigmas) +
                        " standard errors"
                  : c.detail.str();
  return r;
}

// ---- suite: lemma2 (monotone angular separation sweep) -----------------------

SuiteResult suite_lemma2(Fault) {
  Check c;
  RngStream rng(53, "lemma2-suite");
  const double grid[] = {1.05, 1.2, 1.35, 1.5};
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    GradVector v = random_gaussian(rng, 50);
    if (!conc::lemma2_check(v, grid)) ++violations;
  }
  c.expect(violations == 0, std::to_string(violations) + " violations over 1e4 vectors");

  SuiteResult r;
  r.name = "lemma2";
  r.passed = c.ok;
  r.detail = c.ok ? "0 violations over 1e4 Gaussian vectors, q in {1.05,1.2,1.35,1.5}"
                  : c.detail.str();
  return r;
}

// ---- suite: taylor (remainder order) ----------------------------------------

SuiteResult suite_taylor(Fault fault) {
  Check c;
  RngStream rng(61, "taylor-suite");
  const double eps_grid[] = {1e-1, 1e-2, 1e-3};
  double err_sum[3] = {0, 0, 0};

  for (int t = 0; t < 100; ++t) {
    GradVector v = random_gaussian(rng, 1000);
    for (int j = 0; j < 3; ++j) {
      double q = 1.0 + eps_grid[j];
      double exact = conc::cos_2p_exact(v, q);
      double taylor = cos_2p_taylor_impl(fault, v, q, 1e-12);
      err_sum[j] += std::fabs(exact - taylor);
    }
  }
  // least-squares slope through the three log-log points
  double xbar = 0, ybar = 0;
  double xs[3], ys[3];
  for (int j = 0; j < 3; ++j) {
    xs[j] = std::log(eps_grid[j]);
    ys[j] = std::log(err_sum[j] / 100.0);
    xbar += xs[j] / 3.0;
    ybar += ys[j] / 3.0;
  }
  double num = 0, den = 0;
  for (int j = 0; j < 3; ++j) {
    num += (xs[j] - xbar) * (ys[j] - ybar);
    den += (xs[j] - xbar) * (xs[j] - xbar);
  }
  double slope = num / den;
  c.expect(slope >= 1.9, "remainder slope " + std::to_string(slope) + " < 1.9");

  SuiteResult r;
  r.name = "taylor";
  r.passed = c.ok;
  r.detail = c.ok ? "remainder log-log slope " + std::to_string(slope) : c.detail.str();
  return r;
}

// ---- suite: qstar (selector arithmetic and identities) ------------------------

SuiteResult suite_qstar(Fault fault) {
  Check c;

  // identity cos(theta_2inf) = sqrt(pr1/d) along two independent code paths
  RngStream rng(71, "qstar-suite");
  for (int t = 0; t < 500 && c.ok; ++t) {
    GradVector v = random_gaussian(rng, 1 + rng.next_below(200));
    double lhs = conc::cos_2p_exact(v, 1.0);
    double rhs = std::sqrt(conc::pr1(v) / static_cast<double>(v.dim()));
    c.expect(std::fabs(lhs - rhs) < 1e-12, "cos2inf identity off by " +
                                               std::to_string(std::fabs(lhs - rhs)));
    conc::Entropies e = conc::entropies(v, 1e-12);
    c.expect(e.delta_h >= -1e-12, "entropy gap negative");
  }

  // frozen chained example: v = (3,4), tau = 0.995 via the alpha form
  GradVector v34(std::vector<double>{3.0, 4.0});
  double cos2inf = 7.0 / (5.0 * std::sqrt(2.0));
  double alpha = 0.995 / cos2inf - 1.0;
  conc::AdaptPolicy pol = conc::AdaptPolicy::with_alpha(alpha, 1.01, 2.0, 0.0);
  double q_star = select_q_impl(fault, v34, pol);
  // oracle recomputation at 50 digits: raw q = 1.2482773605027732
  c.expect(std::fabs(q_star - 1.2482773605027732) < 1e-9,
           "chained q* example off: " + std::to_string(q_star));

  // beta = 0 collapses to the most aggressive allowed norm
  conc::AdaptPolicy beta0 = conc::AdaptPolicy::with_beta(0.0);
  c.expect(select_q_impl(fault, v34, beta0) == beta0.q_min, "beta=0 must give q_min");

  // uniform gradient permits near-infinity p
  GradVector uni(std::vector<double>(32, 0.7));
  c.expect(select_q_impl(fault, uni, conc::AdaptPolicy::with_beta(0.05)) == 1.01,
           "uniform gradient must select q_min");

  // monotonicity: larger safety angle never decreases q*
  for (int t = 0; t < 100 && c.ok; ++t) {
    GradVector v = random_gaussian(rng, 64);
    double prev = 0.0;
    for (double beta : {0.0, 0.005, 0.01, 0.05, 0.1, 0.3}) {
      double q = select_q_impl(fault, v, conc::AdaptPolicy::with_beta(beta));
      c.expect(q >= prev - 1e-12, "q* decreased as beta grew");
      prev = q;
    }
  }

  SuiteResult r;
  r.name = "qstar";
  r.passed = c.ok;
  r.detail = c.ok ? "cos2inf identity, Jensen gap, frozen selector example, beta monotonicity"
                  : c.detail.str();
  return r;
}

// ---- suite: projection (attack-ball contracts) --------------------------------

SuiteResult suite_projection(Fault fault) {
  Check c;
  RngStream rng(83, "projection-suite");

  // norm saturation: 1e4 random gradients split over d in {8, 512, 3072},
  // p in {2, 4, 16, 64}, soften = 0
  const std::size_t dims[] = {8, 512, 3072};
  const double orders[] = {2.0, 4.0, 16.0, 64.0};
  const int per_dim[] = {3400, 3300, 3300};
  double worst_sat = 0.0;
  for (int di = 0; di < 3 && c.ok; ++di) {
    for (int t = 0; t < per_dim[di]; ++t) {
      GradVector g = random_gaussian(rng, dims[di]);
      for (double p : orders) {
        pt::PerturbSpec spec = pt::PerturbSpec::lp(0.5, p, 0.0);
        GradVector delta = lp_step_delta(fault, g, spec);
        double err = std::fabs(lp_norm(delta, spec.norm) - 0.5) / 0.5;
        worst_sat = std::max(worst_sat, err);
      }
    }
  }
  c.expect(worst_sat < 1e-9, "norm saturation off by rel " + std::to_string(worst_sat));

  // limit reductions
  double worst_p2 = 0.0, worst_q1 = 0.0;
  for (int t = 0; t < 200; ++t) {
    GradVector g = random_gaussian(rng, 64);
    // p = 2 reduces to the normalised gradient
    pt::PerturbSpec s2 = pt::PerturbSpec::lp(0.3, 2.0, 0.0);
    GradVector d2 = lp_step_delta(fault, g, s2);
    double gn = l2_norm(g);
    for (std::size_t i = 0; i < g.dim(); ++i)
      worst_p2 = std::max(worst_p2, std::fabs(d2[i] - 0.3 * g[i] / gn));
    // q -> 1 approaches FGSM on gradients bounded away from zero
    GradVector gb = g;
    for (auto& x : gb.values)
      if (std::fabs(x) < 0.01) x = x >= 0 ? 0.01 : -0.01;
    double q = 1.0 + 1e-6;
    pt::PerturbSpec s1 = pt::PerturbSpec::lp(0.3, q / (q - 1.0), 0.0);
    GradVector d1 = lp_step_delta(fault, gb, s1);
    GradVector df = pt::fgsm(gb, 0.3).delta;
    for (std::size_t i = 0; i < g.dim(); ++i)
      worst_q1 = std::max(worst_q1, std::fabs(d1[i] - df[i]));
  }
  c.expect(worst_p2 < 1e-12, "p=2 reduction off by " + std::to_string(worst_p2));
  c.expect(worst_q1 < 1e-3 * 0.3, "q->1 limit off by " + std::to_string(worst_q1));

  // maximal-norm scaling on uniform-magnitude gradients with random signs:
  // max ||delta_p||_2 / eps = d^(1/2 - 1/p); at d = 3072, p = inf this is
  // sqrt(3072) ~ 55.4
  {
    const std::size_t d = 3072;
    double eps = 1.0;
    double worst_rel = 0.0;
    double max_inf_ratio = 0.0;
    for (int t = 0; t < 10000; ++t) {
      GradVector g(d);
      for (auto& x : g.values) x = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      if (t < 100) {
        for (double p : {4.0, 16.0}) {
          pt::PerturbSpec sp = pt::PerturbSpec::lp(eps, p, 0.0);
          GradVector delta = lp_step_delta(fault, g, sp);
          double expect_l2 = eps * std::pow(static_cast<double>(d), 0.5 - 1.0 / p);
          worst_rel =
              std::max(worst_rel, std::fabs(l2_norm(delta) / expect_l2 - 1.0));
        }
      }
      GradVector dinf = pt::fgsm(g, eps).delta;
      max_inf_ratio = std::max(max_inf_ratio, l2_norm(dinf) / eps);
    }
    double expect_inf = std::sqrt(static_cast<double>(d));
    c.expect(worst_rel < 1e-6, "d^(1/2-1/p) scaling off by rel " + std::to_string(worst_rel));
    c.expect(std::fabs(max_inf_ratio - expect_inf) < 1e-6 * expect_inf,
             "l-inf amplification != sqrt(d)");
  }

  // every attack respects its ball
  {
    std::size_t d = 32;
    GradVector x0v = random_gaussian(rng, d);
    Tensor x0 = to_tensor(x0v, {d});
    ScalarFn loss = [&](const Tensor& x) {
      ValueGrad out;
      out.grad = GradVector(d);
      out.value = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        out.value += std::sin(3.0 * x.data[i]) + 0.5 * x.data[i] * x.data[i];
        out.grad[i] = 3.0 * std::cos(3.0 * x.data[i]) + x.data[i];
      }
      return out;
    };
    for (int t = 0; t < 20 && c.ok; ++t) {
      double eps = rng.uniform(0.01, 0.5);
      for (double p : {2.0, 4.0, 16.0}) {
        pt::AttackSpec atk;
        atk.norm = NormParam::finite(p);
        atk.epsilon = eps;
        atk.steps = 10;
        atk.restarts = 2;
        RngStream arng(97, "projection-pgd", static_cast<std::uint64_t>(t));
        pt::PgdResult res = pt::pgd_attack(loss, x0, atk, arng);
        c.expect(res.perturbation.achieved_norm <= eps * (1.0 + 1e-9), "pgd left its lp ball");
      }
      pt::AttackSpec atk_inf;
      atk_inf.norm = NormParam::inf();
      atk_inf.epsilon = eps;
      atk_inf.steps = 10;
      atk_inf.restarts = 2;
      RngStream arng(97, "projection-pgd-inf", static_cast<std::uint64_t>(t));
      pt::PgdResult res = pt::pgd_attack(loss, x0, atk_inf, arng);
      c.expect(res.perturbation.achieved_norm <= eps * (1.0 + 1e-9), "pgd left the box");

      pt::PerturbSpec nspec = pt::PerturbSpec::lp(eps, 4.0);
      nspec.noise_mode = pt::NoiseMode::InitBoundary;
      RngStream nrng(97, "projection-noise", static_cast<std::uint64_t>(t));
      pt::NoisePlacement np = pt::noise_placement(x0, nspec, nrng);
      c.expect(std::fabs(lp_norm(np.delta0, nspec.norm) - eps) <= 1e-9 * eps,
               "boundary projection not exactly on the sphere");

      pt::PerturbSpec rspec = pt::PerturbSpec::linf(eps);
      RngStream rrng(97, "projection-rs", static_cast<std::uint64_t>(t));
      pt::Perturbation rs = pt::rs_fgsm(loss, x0, rspec, rrng);
      c.expect(rs.achieved_norm <= eps * (1.0 + 1e-12), "rs-fgsm left the box");
    }
  }

  SuiteResult r;
  r.name = "projection";
  r.passed = c.ok;
  r.detail =
      c.ok ? "saturation, limit reductions, maximal-norm scaling, ball contracts" : c.detail.str();
  return r;
}

}  // namespace

std::optional<Fault> fault_from_name(const std::string& name) {
  if (name == "none") return Fault::None;
  if (name == "lp-step-drop-exponent") return Fault::LpStepDropExponent;
  if (name == "taylor-no-gap") return Fault::TaylorNoGap;
  if (name == "qstar-no-sqrt") return Fault::QstarNoSqrt;
  return std::nullopt;
}

std::vector<std::string> fault_names() {
  return {"lp-step-drop-exponent", "taylor-no-gap", "qstar-no-sqrt"};
}

std::vector<std::string> suite_names() {
  return {"norms", "autodiff", "fixed_point", "lemma1", "lemma2", "taylor", "qstar", "projection"};
}

SuiteResult run_suite(const std::string& name, Fault fault) {
  auto start = Clock::now();
  SuiteResult r;
  if (name == "norms")
    r = suite_norms(fault);
  else if (name == "autodiff")
    r = suite_autodiff(fault);
  else if (name == "fixed_point")
    r = suite_fixed_point(fault);
  else if (name == "lemma1")
    r = suite_lemma1(fault);
  else if (name == "lemma2")
    r = suite_lemma2(fault);
  else if (name == "taylor")
    r = suite_taylor(fault);
  else if (name == "qstar")
    r = suite_qstar(fault);
  else if (name == "projection")
    r = suite_projection(fault);
  else
    throw std::invalid_argument("unknown verify suite: " + name);
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::vector<SuiteResult> run_all(Fault fault) {
  std::vector<SuiteResult> out;
  for (const auto& name : suite_names()) out.push_back(run_suite(name, fault));
  return out;
}

}  // namespace lpforge::verify
