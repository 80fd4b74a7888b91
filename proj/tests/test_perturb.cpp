#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lpforge/perturb.hpp"
#include "lpforge/spectral.hpp"
#include "lpforge/model.hpp"
#include "oracles.hpp"

using namespace lpforge;
using namespace lpforge::perturb;

TEST_SUITE("perturb") {

TEST_CASE("fgsm sign definition, degenerate gradient, saturation") {
  Perturbation p = fgsm(GradVector(std::vector<double>{3.0, -4.0, 0.0}), 0.1);
  CHECK(p.delta[0] == doctest::Approx(0.1));
  CHECK(p.delta[1] == doctest::Approx(-0.1));
  CHECK(p.delta[2] == 0.0);
  CHECK(!p.null_gradient);

  Perturbation z = fgsm(GradVector(std::size_t{4}), 0.1);
  CHECK(z.null_gradient);
  for (double v : z.delta.values) CHECK(v == 0.0);

  Perturbation s = fgsm(GradVector(std::vector<double>{1e-9, -2.0, 5.0}), 0.25);
  CHECK(s.achieved_norm == 0.25);
}

TEST_CASE("lp_step at p=2 is the normalised gradient") {
  PerturbSpec spec = PerturbSpec::lp(1.0, 2.0, 0.0);
  Perturbation p = lp_step(GradVector(std::vector<double>{3.0, 4.0}), spec);
  CHECK(p.delta[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(p.delta[1] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("lp_step at p=4 against the arbitrary-precision values") {
  PerturbSpec spec = PerturbSpec::lp(1.0, 4.0, 0.0);
  Perturbation p = lp_step(GradVector(std::vector<double>{3.0, 4.0}), spec);
  CHECK(p.delta[0] == doctest::Approx(0.79787468849103093).epsilon(1e-12));
  CHECK(p.delta[1] == doctest::Approx(0.87817472504394901).epsilon(1e-12));
  CHECK(lp_norm(p.delta, 4.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform gradient spreads the budget as eps d^(-1/p)") {
  const std::size_t d = 16;
  GradVector g(std::vector<double>(d, 0.37));
  for (double p : {2.0, 4.0, 16.0}) {
    PerturbSpec spec = PerturbSpec::lp(0.5, p, 0.0);
    Perturbation out = lp_step(g, spec);
    double expect = 0.5 * std::pow(static_cast<double>(d), -1.0 / p);
    for (double v : out.delta.values) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    CHECK(out.achieved_norm == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("q=1 sentinel reproduces fgsm bit-for-bit") {
  RngStream rng(21, "perturb-q1");
  for (int t = 0; t < 50; ++t) {
    GradVector g(8);
    for (auto& x : g.values) x = rng.normal();
    g[rng.next_below(8)] = 0.0;
    PerturbSpec spec = PerturbSpec::linf(0.3);
    Perturbation a = lp_step(g, spec);
    Perturbation b = fgsm(g, 0.3);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.delta[i] == b.delta[i]);
  }
}

TEST_CASE("q just above 1 stays within 1e-3 of fgsm on bounded gradients") {
  RngStream rng(22, "perturb-q1eps");
  double q = 1.0 + 1e-6;
  PerturbSpec spec = PerturbSpec::lp(1.0, q / (q - 1.0), 0.0);
  for (int t = 0; t < 50; ++t) {
    GradVector g(32);
    for (auto& x : g.values) {
      x = rng.normal();
      if (std::fabs(x) < 0.01) x = x >= 0 ? 0.01 : -0.01;
    }
    Perturbation a = lp_step(g, spec);
    Perturbation b = fgsm(g, 1.0);
    for (std::size_t i = 0; i < 32; ++i) CHECK(std::fabs(a.delta[i] - b.delta[i]) <= 1e-3);
  }
}

TEST_CASE("norm saturation and scale invariance with no zero components") {
  RngStream rng(23, "perturb-sat");
  for (double p : {2.0, 4.0, 16.0, 64.0}) {
    PerturbSpec spec = PerturbSpec::lp(0.7, p, 0.0);
    for (int t = 0; t < 30; ++t) {
      GradVector g(40);
      for (auto& x : g.values) x = rng.normal() + (x >= 0 ? 1e-3 : -1e-3);
      Perturbation a = lp_step(g, spec);
      CHECK(a.achieved_norm == doctest::Approx(0.7).epsilon(1e-9));
      double c = std::exp(rng.uniform(-3.0, 3.0));
      GradVector cg = g;
      for (auto& x : cg.values) x *= c;
      Perturbation b = lp_step(cg, spec);
      for (std::size_t i = 0; i < g.dim(); ++i)
        CHECK(b.delta[i] == doctest::Approx(a.delta[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softening keeps the sign gate: zero components stay zero") {
  PerturbSpec spec = PerturbSpec::lp(1.0, 4.0, 1e-12);
  Perturbation p = lp_step(GradVector(std::vector<double>{0.0, 2.0}), spec);
  CHECK(p.delta[0] == 0.0);
  CHECK(p.delta[1] > 0.0);
  CHECK(p.achieved_norm < 1.0 + 1e-9);
}

TEST_CASE("upsilon filter") {
  GradVector onehot(std::vector<double>{0.0, 5.0, 0.0});
  GradVector u = upsilon(onehot, 1.5);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u[2] == 0.0);

  GradVector g34(std::vector<double>{3.0, 4.0});
  GradVector u34 = upsilon(g34, 4.0 / 3.0);
  CHECK(u34[0] == doctest::Approx(0.79787468849103093).epsilon(1e-12));
  CHECK(u34[1] == doctest::Approx(0.87817472504394901).epsilon(1e-12));

  RngStream rng(24, "upsilon");
  GradVector g(16);
  for (auto& x : g.values) x = rng.normal() * 2.0 + (x >= 0 ? 0.1 : -0.1);
  GradVector lim = upsilon(g, 1.0 + 1e-6);
  for (double v : lim.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::fabs(v - 1.0) < 1e-3);
  }
  CHECK_THROWS_AS(upsilon(GradVector(std::size_t{3}), 1.5), std::domain_error);
  CHECK_THROWS_AS(upsilon(g, 2.5), std::invalid_argument);
}

TEST_CASE("one fixed-point application equals lp_step of the clean gradient") {
  ScalarFn f = oracles::diag_quadratic({2.0, 1.0, 0.5}, {0.3, -0.2, 0.9});
  Tensor x0 = Tensor::vector({0.5, -1.0, 0.25});
  PerturbSpec spec = PerturbSpec::lp(0.2, 4.0, 0.0);
  Perturbation one = fixed_point_solve(f, x0, spec, 1, 1e-9);
  Perturbation direct = lp_step(f(x0).grad, spec);
  for (std::size_t i = 0; i < 3; ++i) CHECK(one.delta[i] == direct.delta[i]);
}

TEST_CASE("linear loss converges in exactly one iteration") {
  ScalarFn f = oracles::diag_quadratic({0.0, 0.0}, {2.0, -1.0});
  Tensor x0 = Tensor::vector({0.0, 0.0});
  for (double p : {2.0, 4.0}) {
    PerturbSpec spec = PerturbSpec::lp(0.5, p, 0.0);
    Perturbation sol = fixed_point_solve(f, x0, spec, 50, 1e-9);
    CHECK(sol.converged);
    CHECK(sol.iterations == 1);
    Perturbation direct = lp_step(f(x0).grad, spec);
    for (std::size_t i = 0; i < 2; ++i) CHECK(sol.delta[i] == direct.delta[i]);
  }
}

TEST_CASE("fixed point matches the projected-ascent oracle on a PD quadratic") {
  RngStream rng(25, "perturb-fp");
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t d = 2 + rng.next_below(7);
    std::vector<double> lam(d), b(d);
    for (auto& l : lam) l = rng.uniform(0.5, 2.0);
    for (auto& x : b) x = rng.normal();
    GradVector x0v(d);
    for (auto& x : x0v.values) x = rng.normal();
    ScalarFn f = oracles::diag_quadratic(lam, b);
    Tensor x0 = to_tensor(x0v, {d});
    double lam_max = *std::max_element(lam.begin(), lam.end());
    double g0 = l2_norm(f(x0).grad);
    if (g0 < 1e-6) continue;
    double eps = 0.4 * g0 / lam_max;

    PerturbSpec spec = PerturbSpec::lp(eps, 2.0, 0.0);
    Perturbation fp = fixed_point_solve(f, x0, spec, 50, 1e-9);
    CHECK(fp.converged);
    CHECK(std::fabs(fp.achieved_norm - eps) < 1e-9 * eps);

    GradVector delta(d);
    double lr = 0.5 / lam_max;
    for (int k = 0; k < 100000; ++k) {
      GradVector grad(d);
      for (std::size_t i = 0; i < d; ++i) grad[i] = lam[i] * (x0v[i] + delta[i]) + b[i];
      for (std::size_t i = 0; i < d; ++i) delta[i] += lr * grad[i];
      double n = l2_norm(delta);
      if (n > eps)
        for (std::size_t i = 0; i < d; ++i) delta[i] *= eps / n;
    }
    double cosang = dot(delta, fp.delta) / (l2_norm(delta) * l2_norm(fp.delta));
    CHECK(std::acos(std::clamp(cosang, -1.0, 1.0)) < 1e-3);
  }
}

TEST_CASE("NaN gradients abort the fixed point with the iterate index") {
  ScalarFn f = [](const Tensor& x) {
    ValueGrad out;
    out.grad = GradVector(x.numel());
    out.grad[0] = std::nan("");
    return out;
  };
  PerturbSpec spec = PerturbSpec::lp(0.1, 2.0);
  CHECK_THROWS_WITH_AS(fixed_point_solve(f, Tensor::vector({1.0, 2.0}), spec, 5, 1e-9),
                       doctest::Contains("iterate 1"), std::runtime_error);
}

TEST_CASE("rs-fgsm: noise passthrough on zero gradients, box contract, determinism") {
  ScalarFn flat = [](const Tensor& x) {
    ValueGrad out;
    out.grad = GradVector(x.numel());
    return out;
  };
  PerturbSpec spec = PerturbSpec::linf(0.2);
  Tensor x0 = Tensor::vector({0.1, 0.2, 0.3});

  RngStream rng_a(77, "rs", 0);
  Perturbation a = rs_fgsm(flat, x0, spec, rng_a);
  CHECK(a.null_gradient);
  CHECK(a.achieved_norm <= 0.2);

  RngStream rng_b(77, "rs", 0);
  Perturbation b = rs_fgsm(flat, x0, spec, rng_b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.delta[i] == b.delta[i]);

  ScalarFn bumpy = oracles::diag_quadratic({3.0, -1.0, 2.0}, {0.4, 0.4, -0.2});
  RngStream rng_c(78, "rs", 1);
  Perturbation c = rs_fgsm(bumpy, x0, spec, rng_c);
  CHECK(c.achieved_norm <= 0.2 * (1 + 1e-12));
  CHECK_THROWS_AS(rs_fgsm(bumpy, x0, PerturbSpec::lp(0.2, 4.0), rng_c), std::invalid_argument);
}

TEST_CASE("noise placement modes") {
  Tensor x0 = Tensor::vector({0.5, 0.5, 0.5, 0.5});

  PerturbSpec boundary = PerturbSpec::lp(0.3, 4.0);
  boundary.noise_mode = NoiseMode::InitBoundary;
  for (int s = 0; s < 20; ++s) {
    RngStream rng(100 + s, "np");
    NoisePlacement np = noise_placement(x0, boundary, rng);
    CHECK(lp_norm(np.delta0, boundary.norm) == doctest::Approx(0.3).epsilon(1e-9));
    for (std::size_t i = 0; i < 4; ++i) CHECK(np.x_used.data[i] == x0.data[i]);
  }

  PerturbSpec degenerate = PerturbSpec::linf(0.0);
  degenerate.noise_mode = NoiseMode::AugmentInput;
  RngStream rng0(5, "np0");
  NoisePlacement np0 = noise_placement(x0, degenerate, rng0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(np0.x_used.data[i] == x0.data[i]);

  // Both mode reuses one draw for augmentation and boundary projection
  PerturbSpec both = PerturbSpec::lp(0.3, 2.0);
  both.noise_mode = NoiseMode::Both;
  RngStream rng1(9, "np-both");
  NoisePlacement npb = noise_placement(x0, both, rng1);
  GradVector eta(4);
  for (std::size_t i = 0; i < 4; ++i) eta[i] = npb.x_used.data[i] - x0.data[i];
  double scale = 0.3 / l2_norm(eta);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(npb.delta0[i] == doctest::Approx(eta[i] * scale).epsilon(1e-12));

  PerturbSpec none = PerturbSpec::linf(0.1);
  RngStream rng2(6, "np-none");
  CHECK_THROWS_AS(noise_placement(x0, none, rng2), std::invalid_argument);
}

TEST_CASE("single-step linf pgd with step eps from zero init equals fgsm") {
  ScalarFn f = oracles::diag_quadratic({2.0, -3.0, 1.0}, {0.5, 0.2, -0.7});
  Tensor x0 = Tensor::vector({0.3, -0.6, 0.9});
  AttackSpec atk;
  atk.steps = 1;
  atk.restarts = 1;
  atk.step_size = 0.15;
  atk.epsilon = 0.15;
  atk.norm = NormParam::inf();
  RngStream rng(1, "pgd");
  PgdResult res = pgd_attack(f, x0, atk, rng);
  Perturbation ref = fgsm(f(x0).grad, 0.15);
  for (std::size_t i = 0; i < 3; ++i) CHECK(res.perturbation.delta[i] == ref.delta[i]);
}

TEST_CASE("pgd respects the ball and the clip domain") {
  ScalarFn f = oracles::diag_quadratic({5.0, 5.0}, {1.0, -1.0});
  Tensor x0 = Tensor::vector({0.9, 0.1});
  for (int t = 0; t < 5; ++t) {
    AttackSpec atk;
    atk.steps = 15;
    atk.restarts = 3;
    atk.epsilon = 0.3;
    atk.norm = t % 2 == 0 ? NormParam::inf() : NormParam::finite(2.0);
    atk.clip_domain = {{0.0, 1.0}};
    RngStream rng(50 + t, "pgd-ball");
    PgdResult res = pgd_attack(f, x0, atk, rng);
    CHECK(res.perturbation.achieved_norm <= 0.3 * (1 + 1e-9));
    for (std::size_t i = 0; i < 2; ++i) {
      double xi = x0.data[i] + res.perturbation.delta[i];
      CHECK(xi >= -1e-12);
      CHECK(xi <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("long l2 pgd agrees with the fixed point on a strict quadratic") {
  std::vector<double> lam{1.2, 0.8, 1.7, 0.6};
  std::vector<double> b{0.3, -0.4, 0.2, 0.5};
  ScalarFn f = oracles::diag_quadratic(lam, b);
  Tensor x0 = Tensor::vector({0.2, 0.1, -0.3, 0.4});
  double g0 = l2_norm(f(x0).grad);
  double eps = 0.4 * g0 / 1.7;

  PerturbSpec spec = PerturbSpec::lp(eps, 2.0, 0.0);
  Perturbation fp = fixed_point_solve(f, x0, spec, 50, 1e-9);

  AttackSpec atk;
  atk.steps = 200;
  atk.restarts = 1;
  atk.epsilon = eps;
  atk.step_size = eps / 20.0;  // enough tangential travel to slide along the sphere
  atk.norm = NormParam::finite(2.0);
  RngStream rng(3, "pgd-vs-fp");
  PgdResult res = pgd_attack(f, x0, atk, rng);

  double cosang = dot(res.perturbation.delta, fp.delta) /
                  (l2_norm(res.perturbation.delta) * l2_norm(fp.delta));
  CHECK(std::acos(std::clamp(cosang, -1.0, 1.0)) < 1e-2);
}

TEST_CASE("lipschitz constant on closed-form losses") {
  // isotropic quadratic at unit radius: K = 2 eps
  double lam = 3.7;
  ScalarFn iso = oracles::diag_quadratic({lam, lam});
  Tensor x0 = Tensor::vector({0.6, 0.8});  // unit norm
  CHECK(lipschitz_K(iso, x0, 0.25) == doctest::Approx(0.5).epsilon(1e-6));

  ScalarFn lin = oracles::diag_quadratic({0.0, 0.0}, {1.0, 2.0});
  CHECK(lipschitz_K(lin, x0, 0.25) == doctest::Approx(0.0).epsilon(1e-9));

  ScalarFn flat = [](const Tensor& x) {
    ValueGrad out;
    out.grad = GradVector(x.numel());
    return out;
  };
  CHECK_THROWS_AS(lipschitz_K(flat, x0, 0.25), std::domain_error);
}

TEST_CASE("lipschitz constant matches the dense Hessian oracle on an MLP point") {
  const std::size_t d = 12;
  model::ModelParams params = model::make_mlp(d, {14}, 3, model::Activation::GeluApprox, 4242);
  std::vector<int> y{2};
  ScalarFn loss = [&](const Tensor& x) {
    Tensor batch({1, d}, x.data);
    model::LossGrads lg = model::xent_loss_and_grads(params, batch, y);
    return ValueGrad{lg.loss, lg.input_grads[0]};
  };
  RngStream rng(31, "lipschitz-mlp");
  Tensor x({d});
  for (auto& v : x.data) v = rng.uniform01();

  double eps = 0.1;
  double k_est = lipschitz_K(loss, x, eps, 800, 1e-10);

  auto hess = oracles::fd_dense_hessian(loss, x);
  auto eig = oracles::jacobi_eigenvalues(hess);
  double spec_norm = 0.0;
  for (double e : eig) spec_norm = std::max(spec_norm, std::fabs(e));
  double k_oracle = 2.0 * eps * spec_norm / l2_norm(loss(x).grad);
  CHECK(std::fabs(k_est - k_oracle) / k_oracle < 0.05);
}

TEST_CASE("gradient alignment cosine") {
  ScalarFn lin = oracles::diag_quadratic({0.0, 0.0}, {3.0, -4.0});
  Tensor x0 = Tensor::vector({0.1, 0.2});
  CHECK(grad_align_cos(lin, x0, 0.5) == 1.0);

  // anisotropic quadratic: closed-form cosine between g(x0) and g(x0 + eps u)
  std::vector<double> lam{1.0, 100.0};
  ScalarFn quad = oracles::diag_quadratic(lam);
  Tensor far = Tensor::vector({5.0, 0.05});
  double eps = 0.3;
  GradVector g0(std::vector<double>{lam[0] * far.data[0], lam[1] * far.data[1]});
  double n0 = l2_norm(g0);
  GradVector g1(std::vector<double>{lam[0] * (far.data[0] + eps * g0[0] / n0),
                                    lam[1] * (far.data[1] + eps * g0[1] / n0)});
  double expect = dot(g0, g1) / (n0 * l2_norm(g1));
  double got = grad_align_cos(quad, far, eps);
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));
  CHECK(got < 1.0);
  CHECK(got >= -1.0);

  ScalarFn flat = [](const Tensor& x) {
    ValueGrad out;
    out.grad = GradVector(x.numel());
    return out;
  };
  CHECK_THROWS_AS(grad_align_cos(flat, x0, 0.5), std::domain_error);
}

TEST_CASE("perturb spec rejects orders in (1,2) and empty clip domains") {
  CHECK_THROWS_AS(PerturbSpec::lp(0.1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(PerturbSpec::lp(-0.1, 2.0), std::invalid_argument);
  PerturbSpec s = PerturbSpec::lp(0.1, 2.0);
  s.clip_domain = {{1.0, 0.0}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

}  // TEST_SUITE
