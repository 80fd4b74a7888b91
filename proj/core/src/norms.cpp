#include "lpforge/norms.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lpforge {

NormParam NormParam::finite(double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("NormParam: finite order requires p >= 1");
  return NormParam(p, false);
}

NormParam NormParam::inf() { return NormParam(std::numeric_limits<double>::infinity(), true); }

double NormParam::p() const {
  if (inf_) throw std::logic_error("NormParam::p: infinity sentinel has no finite order");
  return p_;
}

double NormParam::dual_q() const {
  if (inf_) return 1.0;
  if (p_ == 1.0) return std::numeric_limits<double>::infinity();
  return p_ / (p_ - 1.0);
}

std::string NormParam::str() const {
  if (inf_) return "inf";
  std::ostringstream os;
  os << p_;
  return os.str();
}

bool NormParam::operator==(const NormParam& other) const {
  return inf_ == other.inf_ && (inf_ || p_ == other.p_);
}

namespace {

void check_no_nan(const GradVector& v) {
  for (double x : v.values)
    if (std::isnan(x)) throw std::domain_error("lp_norm: NaN entry");
}

double max_abs(const GradVector& v) {
  double m = 0.0;
  for (double x : v.values) {
    double a = std::fabs(x);
    if (a > m) m = a;
  }
  return m;
}

}  // namespace

double lp_norm(const GradVector& v, const NormParam& p) {
  if (v.dim() == 0) throw std::domain_error("lp_norm: empty vector");
  check_no_nan(v);
  double m = max_abs(v);
  if (p.is_inf() || m == 0.0) return m;
  double order = p.p();
  if (order == 1.0) {
    double acc = 0.0;
    for (double x : v.values) acc += std::fabs(x);
    return acc;
  }
  if (order == 2.0) {
    double acc = 0.0;
    for (double x : v.values) {
      double r = x / m;
      acc += r * r;
    }
    return m * std::sqrt(acc);
  }
  double acc = 0.0;
  for (double x : v.values) acc += std::pow(std::fabs(x) / m, order);
  return m * std::pow(acc, 1.0 / order);
}

double lp_norm(const GradVector& v, double p) { return lp_norm(v, NormParam::finite(p)); }

double l1_norm(const GradVector& v) { return lp_norm(v, NormParam::finite(1.0)); }
double l2_norm(const GradVector& v) { return lp_norm(v, NormParam::finite(2.0)); }
double linf_norm(const GradVector& v) { return lp_norm(v, NormParam::inf()); }

double abs_pow_sum(const GradVector& v, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("abs_pow_sum: exponent must be positive");
  double acc = 0.0;
  for (double x : v.values) {
    double a = std::fabs(x);
    if (a != 0.0) acc += std::pow(a, s);
  }
  return acc;
}

}  // namespace lpforge
