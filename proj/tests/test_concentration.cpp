#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lpforge/concentration.hpp"
#include "lpforge/perturb.hpp"
#include "lpforge/norms.hpp"

#include <json.hpp>

using namespace lpforge;
using namespace lpforge::concentration;

TEST_SUITE("concentration") {

TEST_CASE("participation ratio: delocalised, localised, frozen value") {
  GradVector uni(std::vector<double>(24, 0.3));
  CHECK(participation_ratio(uni) == doctest::Approx(24.0).epsilon(1e-12));
  GradVector hot(std::vector<double>{0.0, 0.0, 7.0});
  CHECK(participation_ratio(hot) == doctest::Approx(1.0).epsilon(1e-14));
  GradVector v(std::vector<double>{3.0, 4.0, 0.0, 0.0});
  CHECK(participation_ratio(v) == doctest::Approx(625.0 / 337.0).epsilon(1e-13));
  CHECK_THROWS_AS(participation_ratio(GradVector(std::size_t{3})), std::domain_error);
}

TEST_CASE("pr1: spread, concentration, frozen value") {
  GradVector uni(std::vector<double>{0.5, -0.5, 0.5, 0.5});
  CHECK(pr1(uni) == doctest::Approx(4.0).epsilon(1e-13));
  GradVector hot(std::vector<double>{0.0, 9.0});
  CHECK(pr1(hot) == doctest::Approx(1.0).epsilon(1e-14));
  GradVector v(std::vector<double>{3.0, 4.0});
  CHECK(pr1(v) == doctest::Approx(1.96).epsilon(1e-14));
  CHECK_THROWS_AS(pr1(GradVector(std::size_t{2})), std::domain_error);
}

TEST_CASE("entropies: uniform equality case and frozen values") {
  GradVector uni(std::vector<double>(10, 0.2));
  Entropies e = entropies(uni, 0.0);
  CHECK(e.h == doctest::Approx(std::log(10.0)).epsilon(1e-13));
  CHECK(e.h_m == doctest::Approx(std::log(10.0)).epsilon(1e-13));
  CHECK(e.delta_h == doctest::Approx(0.0).epsilon(1e-13));

  GradVector v(std::vector<double>{3.0, 4.0});
  Entropies f = entropies(v, 0.0);
  CHECK(f.h == doctest::Approx(0.68290810470047166).epsilon(1e-13));
  CHECK(f.h_m == doctest::Approx(0.70345682416131315).epsilon(1e-13));
  CHECK(f.delta_h == doctest::Approx(0.020548719460841495).epsilon(1e-10));
}

TEST_CASE("jensen inequality holds under softening, divergence without it") {
  RngStream rng(61, "conc-jensen");
  for (int t = 0; t < 200; ++t) {
    GradVector v(1 + rng.next_below(64));
    for (auto& x : v.values) x = rng.normal();
    Entropies e = entropies(v, 1e-12);
    CHECK(e.delta_h >= -1e-12);
  }
  // exact zero components make the log-mean entropy diverge without softening
  GradVector withzero(std::vector<double>{0.0, 1.0});
  CHECK(std::isinf(entropies(withzero, 0.0).h_m));
  CHECK(std::isfinite(entropies(withzero, 1e-12).h_m));
}

TEST_CASE("cos_2p_exact: self-cosine, l-inf limit, geometric oracle") {
  RngStream rng(62, "conc-cos");
  for (int t = 0; t < 20; ++t) {
    GradVector v(30);
    for (auto& x : v.values) x = rng.normal();
    CHECK(cos_2p_exact(v, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  GradVector v34(std::vector<double>{3.0, 4.0});
  CHECK(cos_2p_exact(v34, 1.0) == doctest::Approx(7.0 / (5.0 * std::sqrt(2.0))).epsilon(1e-14));

  // literal cosine between the one-step l2 and lp attack directions
  for (int t = 0; t < 25; ++t) {
    GradVector v(100);
    for (auto& x : v.values) x = rng.normal();
    double q = 1.0 + static_cast<double>(1 + rng.next_below(24)) / 25.0;  // q in (1, 2)
    perturb::PerturbSpec s2 = perturb::PerturbSpec::lp(1.0, 2.0, 0.0);
    perturb::PerturbSpec sp = perturb::PerturbSpec::lp(1.0, q / (q - 1.0), 0.0);
    GradVector d2 = perturb::lp_step(v, s2).delta;
    GradVector dp = perturb::lp_step(v, sp).delta;
    double literal = dot(d2, dp) / (l2_norm(d2) * l2_norm(dp));
    CHECK(std::fabs(cos_2p_exact(v, q) - literal) < 1e-10);
  }
  CHECK_THROWS_AS(cos_2p_exact(GradVector(std::size_t{4}), 1.5), std::domain_error);
  CHECK_THROWS_AS(cos_2p_exact(v34, 2.5), std::invalid_argument);
}

TEST_CASE("cos_2p_taylor: zeroth order and the uniform case") {
  RngStream rng(63, "conc-taylor");
  for (int t = 0; t < 20; ++t) {
    GradVector v(50);
    for (auto& x : v.values) x = rng.normal();
    double c2i = std::sqrt(pr1(v) / 50.0);
    CHECK(cos_2p_taylor(v, 1.0, 1e-12) == doctest::Approx(c2i).epsilon(1e-12));
  }
  GradVector uni(std::vector<double>(16, 0.25));
  for (double q : {1.0, 1.3, 1.7, 2.0})
    CHECK(cos_2p_taylor(uni, q, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("select_q: frozen chained example via the alpha barrier") {
  GradVector v(std::vector<double>{3.0, 4.0});
  double cos2inf = 7.0 / (5.0 * std::sqrt(2.0));
  AdaptPolicy pol = AdaptPolicy::with_alpha(0.995 / cos2inf - 1.0, 1.01, 2.0, 0.0);
  Selection sel = select_q(v, pol);
  CHECK(sel.tau == doctest::Approx(0.995).epsilon(1e-12));
  CHECK(sel.q_star == doctest::Approx(1.2482773605027732).epsilon(1e-10));
  CHECK(sel.p_star == doctest::Approx(5.0277534688420783).epsilon(1e-9));
  CHECK(sel.report.d == 2);
  CHECK(!sel.report.degenerate_gap);
}

TEST_CASE("select_q: zero safety margin collapses to q_min") {
  RngStream rng(64, "conc-beta0");
  AdaptPolicy pol = AdaptPolicy::with_beta(0.0);
  for (int t = 0; t < 30; ++t) {
    GradVector v(16);
    for (auto& x : v.values) x = rng.normal();
    CHECK(select_q(v, pol).q_star == pol.q_min);
  }
}

TEST_CASE("select_q: uniform gradient permits the most aggressive norm") {
  GradVector uni(std::vector<double>(32, -0.4));
  Selection sel = select_q(uni, AdaptPolicy::with_beta(0.05));
  CHECK(sel.q_star == 1.01);
  CHECK(sel.p_star == doctest::Approx(1.01 / 0.01).epsilon(1e-9));
  CHECK(!sel.report.degenerate_gap);
}

TEST_CASE("select_q: unreachable barrier with a vanishing gap flags q_max") {
  GradVector uni(std::vector<double>(8, 1.0));
  Selection sel = select_q(uni, AdaptPolicy::with_alpha(0.5));
  CHECK(sel.q_star == 2.0);
  CHECK(sel.report.degenerate_gap);
}

TEST_CASE("select_q: monotone in beta") {
  RngStream rng(65, "conc-mono");
  for (int t = 0; t < 50; ++t) {
    GradVector v(40);
    for (auto& x : v.values) x = rng.normal();
    double prev = 0.0;
    for (double beta : {0.0, 0.002, 0.01, 0.05, 0.2, 0.5}) {
      double q = select_q(v, AdaptPolicy::with_beta(beta)).q_star;
      CHECK(q >= prev - 1e-12);
      prev = q;
    }
  }
  CHECK_THROWS_AS(select_q(GradVector(std::size_t{4}), AdaptPolicy::with_beta(0.01)),
                  std::domain_error);
}

TEST_CASE("policy validation: exactly one barrier parameter") {
  AdaptPolicy p;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.alpha = 0.1;
  p.beta = 0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(AdaptPolicy::with_beta(0.01, 1.0), std::invalid_argument);   // q_min == 1
  CHECK_THROWS_AS(AdaptPolicy::with_beta(0.01, 1.5, 1.2), std::invalid_argument);
}

TEST_CASE("lemma1: vanishing noise, concentrated gain, uniform boundary") {
  const std::size_t d = 100;
  RngStream grng(66, "conc-l1");
  GradVector g(d);
  for (std::size_t i = 0; i < d; ++i)
    g[i] = (i < 2 ? 1.0 : 0.02) * (grng.uniform01() < 0.5 ? -1.0 : 1.0);

  RngStream mc1(67, "conc-l1-mc", 1);
  Lemma1Result tiny = lemma1_mc_check(g, 1e-9, 20000, mc1);
  CHECK(std::fabs(tiny.margin) <= 3.0 * std::max(tiny.std_error, 1e-12));

  RngStream mc2(67, "conc-l1-mc", 2);
  GradVector unit = g;
  double n2 = l2_norm(unit);
  for (auto& x : unit.values) x /= n2;
  Lemma1Result res = lemma1_mc_check(g, 0.05 * linf_norm(unit), 100000, mc2);
  CHECK(res.margin > 3.0 * res.std_error);

  GradVector uni(std::vector<double>(d, 1.0));
  RngStream mc3(67, "conc-l1-mc", 3);
  Lemma1Result bound = lemma1_mc_check(uni, 0.05 / std::sqrt(static_cast<double>(d)), 50000, mc3);
  CHECK(bound.margin <= 3.0 * bound.std_error);
}

TEST_CASE("lemma2: degenerate support, random sweep, equality case") {
  const double grid[] = {1.05, 1.2, 1.35, 1.5};
  GradVector hot(std::vector<double>{0.0, 0.0, 5.0, 0.0});
  CHECK(lemma2_check(hot, grid));
  GradVector uni(std::vector<double>(12, 0.5));
  CHECK(lemma2_check(uni, grid));
  RngStream rng(68, "conc-l2");
  for (int t = 0; t < 500; ++t) {
    GradVector v(50);
    for (auto& x : v.values) x = rng.normal();
    CHECK(lemma2_check(v, grid));
  }
}

TEST_CASE("report serialises to a flat json object with the exact field names") {
  GradVector v(std::vector<double>{3.0, 4.0});
  ConcentrationReport rep = report_for(v, AdaptPolicy::with_beta(0.01));
  nlohmann::json j = nlohmann::json::parse(rep.to_json_string());
  for (const char* key :
       {"d", "pr", "pr1", "h", "h_m", "delta_h", "cos2inf", "q_star", "p_star", "tau"})
    CHECK(j.contains(key));
  CHECK(j["d"] == 2);
  CHECK(j["pr1"].get<double>() == doctest::Approx(1.96));
  CHECK(j["cos2inf"].get<double>() ==
        doctest::Approx(std::sqrt(j["pr1"].get<double>() / 2.0)).epsilon(1e-12));
}

}  // TEST_SUITE
