#include "kcs/special.hpp"

#include <cmath>
#include <limits>

#include "kcs/error.hpp"

namespace kcs {

namespace {

// Series expansion of P(a, x), reliable for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericFailure("gamma_p: series did not converge", 500);
}

// Modified Lentz continued fraction for Q(a, x), reliable for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double fpmin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw NumericFailure("gamma_p: continued fraction did not converge", 500);
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw ContractViolation("gamma_p: a must be positive");
  if (x < 0.0) throw ContractViolation("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractViolation("normal_quantile: p outside (0, 1)");

  // Rational approximation (Acklam), then one Halley refinement against the
  // erfc-based CDF; the result is accurate to a few ulps.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double chi_squared_quantile(std::size_t m, double alpha) {
  if (m < 1) throw ContractViolation("chi_squared_quantile: m must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ContractViolation("chi_squared_quantile: alpha outside (0, 1)");

  const double md = static_cast<double>(m);
  const double half = md / 2.0;
  const double target = 1.0 - alpha;

  // Wilson-Hilferty starting point, then safeguarded Newton on the CDF.
  const double z = normal_quantile(target);
  const double t = 1.0 - 2.0 / (9.0 * md) + z * std::sqrt(2.0 / (9.0 * md));
  double q = md * t * t * t;
  if (!(q > 0.0) || !std::isfinite(q)) q = md;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma_p(half, q / 2.0) - target;
    if (std::fabs(f) <= 1e-12) return q;
    if (f > 0.0)
      hi = q;
    else
      lo = q;
    const double log_pdf =
        (half - 1.0) * std::log(q) - q / 2.0 - half * std::log(2.0) - std::lgamma(half);
    const double pdf = std::exp(log_pdf);
    double next = q - f / pdf;
    const bool inside = pdf > 0.0 && std::isfinite(next) && next > lo &&
                        (std::isinf(hi) || next < hi);
    if (!inside) next = std::isinf(hi) ? q * 2.0 : 0.5 * (lo + hi);
    q = next;
  }
  throw NumericFailure("chi_squared_quantile: inversion did not converge", 200);
}

}  // namespace kcs
