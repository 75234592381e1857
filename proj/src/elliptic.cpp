#include "bjj/elliptic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bjj/errors.hpp"

namespace bjj::elliptic {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Longest AGM ladder needed for m in [0, 1): convergence is quadratic, so
// even m = 1 - 1e-300 finishes in well under this many steps.
constexpr int kMaxAgmSteps = 40;

void check_parameter(double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) {
    throw DomainError("elliptic parameter m must be finite and >= 0, got " + std::to_string(m));
  }
}

// Carlson's symmetric integral RF(x, y, z) by duplication.
double carlson_rf(double x, double y, double z) {
  static const double tol = std::pow(3.0 * kEps * 0.01, 1.0 / 8.0);
  const double a0 = (x + y + z) / 3.0;
  double an = a0;
  double q = std::max({std::abs(a0 - x), std::abs(a0 - y), std::abs(a0 - z)}) / tol;
  double x0 = x, y0 = y, z0 = z, mul = 1.0;
  while (q >= mul * std::abs(an)) {
    const double lam = std::sqrt(x0) * std::sqrt(y0) + std::sqrt(y0) * std::sqrt(z0) +
                       std::sqrt(z0) * std::sqrt(x0);
    an = (an + lam) / 4.0;
    x0 = (x0 + lam) / 4.0;
    y0 = (y0 + lam) / 4.0;
    z0 = (z0 + lam) / 4.0;
    mul *= 4.0;
  }
  const double xx = (a0 - x) / (mul * an);
  const double yy = (a0 - y) / (mul * an);
  const double zz = -(xx + yy);
  const double e2 = xx * yy - zz * zz;
  const double e3 = xx * yy * zz;
  // DLMF 19.36.1 truncated at 7th order, Horner form.
  return (e3 * (6930.0 * e3 + e2 * (15015.0 * e2 - 16380.0) + 17160.0) +
          e2 * ((10010.0 - 5775.0 * e2) * e2 - 24024.0) + 240240.0) /
         (240240.0 * std::sqrt(an));
}

// F(phi|m) for 0 <= m <= 1 and |phi| <= pi/2.
double principal_F(double phi, double m) {
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  return s * carlson_rf(c * c, 1.0 - m * s * s, 1.0);
}

// Jacobi amplitude for 0 < m < 1 by the descending AGM ladder.
double am_agm(double u, double m) {
  std::array<double, kMaxAgmSteps + 1> a{};
  std::array<double, kMaxAgmSteps + 1> c{};
  a[0] = 1.0;
  c[0] = std::sqrt(m);
  double b = std::sqrt(1.0 - m);
  int n = 0;
  while (std::abs(c[n]) > kEps * a[n] && n < kMaxAgmSteps) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i > 0; --i) {
    phi = 0.5 * (phi + std::asin(c[i] / a[i] * std::sin(phi)));
  }
  return phi;
}

SnCnDn sncndn_below_one(double u, double m) {
  if (m == 0.0) {
    return {std::sin(u), std::cos(u), 1.0};
  }
  const double am = am_agm(u, m);
  const double sn = std::sin(am);
  return {sn, std::cos(am), std::sqrt(1.0 - m * sn * sn)};
}

}  // namespace

double complete_K(double m) {
  check_parameter(m);
  if (m >= 1.0) {
    throw DomainError("K(m) diverges at m=1 (got m=" + std::to_string(m) + ")");
  }
  double a = 1.0;
  double b = std::sqrt(1.0 - m);
  for (int i = 0; i < kMaxAgmSteps && std::abs(a - b) > kEps * a; ++i) {
    const double next = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = next;
  }
  return std::numbers::pi / (a + b);
}

double quarter_period(double m) {
  check_parameter(m);
  if (m < 1.0) return complete_K(m);
  if (m == 1.0) throw DomainError("quarter period diverges at m=1");
  return complete_K(1.0 / m) / std::sqrt(m);
}

double incomplete_F(double phi, double m) {
  check_parameter(m);
  if (m == 0.0) return phi;
  if (m > 1.0) {
    const double root = std::sqrt(m);
    const double limit = std::asin(1.0 / root);
    if (std::abs(phi) > limit * (1.0 + 8.0 * kEps)) {
      throw DomainError("F(phi|m) is complex for m>1 and |phi| > asin(1/sqrt(m))");
    }
    const double s = std::clamp(root * std::sin(phi), -1.0, 1.0);
    return principal_F(std::asin(s), 1.0 / m) / root;
  }
  // Reduce to |phi| <= pi/2 using F(phi + j pi) = F(phi) + 2 j K.
  const double j = std::round(phi / std::numbers::pi);
  const double reduced = phi - j * std::numbers::pi;
  double result = principal_F(reduced, m);
  if (j != 0.0) {
    if (m == 1.0) {
      throw DomainError("F(phi|1) diverges for |phi| >= pi/2");
    }
    result += 2.0 * j * complete_K(m);
  }
  return result;
}

SnCnDn jacobi_sn_cn_dn(double u, double m) {
  check_parameter(m);
  if (m < 1.0) return sncndn_below_one(u, m);
  if (m == 1.0) {
    const double sech = 1.0 / std::cosh(u);
    return {std::tanh(u), sech, sech};
  }
  // Reciprocal-modulus transformation (A&S 16.11).
  const double root = std::sqrt(m);
  const SnCnDn r = sncndn_below_one(root * u, 1.0 / m);
  return {r.sn / root, r.dn, r.cn};
}

double jacobi_am(double u, double m) {
  check_parameter(m);
  if (m == 0.0) return u;
  if (m < 1.0) return am_agm(u, m);
  if (m == 1.0) return std::atan(std::sinh(u));
  // cn(u|m) = dn(sqrt(m) u | 1/m) > 0, so atan2 stays on the principal branch.
  const SnCnDn r = jacobi_sn_cn_dn(u, m);
  return std::atan2(r.sn, r.cn);
}

double inv_sn(double x, double m) {
  check_parameter(m);
  constexpr double slack = 1e-12;
  if (!(std::abs(x) <= 1.0 + slack)) {
    throw DomainError("inv_sn: |x| must be <= 1, got " + std::to_string(x));
  }
  x = std::clamp(x, -1.0, 1.0);
  if (m < 1.0) return incomplete_F(std::asin(x), m);
  if (m == 1.0) {
    if (std::abs(x) == 1.0) throw DomainError("inv_sn(+-1|1) diverges");
    return std::atanh(x);
  }
  const double root = std::sqrt(m);
  const double scaled = x * root;
  if (std::abs(scaled) > 1.0 + slack) {
    throw DomainError("inv_sn: |x| must be <= 1/sqrt(m) for m>1");
  }
  return principal_F(std::asin(std::clamp(scaled, -1.0, 1.0)), 1.0 / m) / root;
}

}  // namespace bjj::elliptic
