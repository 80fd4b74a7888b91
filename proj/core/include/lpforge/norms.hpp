#pragma once

#include <string>

#include "lpforge/tensor.hpp"

namespace lpforge {

/// Norm order: finite p >= 1 or the l-infinity sentinel. Infinity is a
/// distinguished state rather than a large float so that sign-vector
/// semantics stay exact.
class NormParam {
 public:
  static NormParam finite(double p);
  static NormParam inf();

  bool is_inf() const { return inf_; }
  double p() const;

  /// Dual exponent q with 1/p + 1/q = 1; q = 1 for the infinity sentinel.
  double dual_q() const;

  std::string str() const;
  bool operator==(const NormParam& other) const;

 private:
  NormParam(double p, bool is_inf) : p_(p), inf_(is_inf) {}
  double p_ = 2.0;
  bool inf_ = false;
};

/// (sum |v_i|^p)^(1/p), max |v_i| for the infinity sentinel. Max-factored so
/// large p does not overflow. NaN entries raise std::domain_error.
double lp_norm(const GradVector& v, const NormParam& p);
double lp_norm(const GradVector& v, double p);

double l1_norm(const GradVector& v);
double l2_norm(const GradVector& v);
double linf_norm(const GradVector& v);

/// sum_i |v_i|^s for s > 0. Accepts s < 1 (quasi-norm power sums appearing in
/// the angular-separation formulas). 0^s contributes 0.
double abs_pow_sum(const GradVector& v, double s);

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace lpforge
