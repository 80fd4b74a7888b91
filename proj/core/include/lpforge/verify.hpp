#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lpforge::verify {

/// Deliberate formula perturbations used to prove the suites can catch a
/// broken implementation (testing aid; None in normal operation).
enum class Fault {
  None,
  LpStepDropExponent,  // attack filter loses its q-1 exponent
  TaylorNoGap,         // expansion loses the (q-1) delta_h term
  QstarNoSqrt,         // selector loses the sqrt in tau sqrt(d/pr1)
};

std::optional<Fault> fault_from_name(const std::string& name);
std::vector<std::string> fault_names();

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Suites: norms, autodiff, fixed_point, lemma1, lemma2, taylor, qstar,
/// projection. Each is an independent brute-force or closed-form oracle of
/// the formulas it checks.
std::vector<std::string> suite_names();

SuiteResult run_suite(const std::string& name, Fault fault = Fault::None);
std::vector<SuiteResult> run_all(Fault fault = Fault::None);

}  // namespace lpforge::verify
