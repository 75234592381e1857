#pragma once

// Jacobi elliptic functions and elliptic integrals of the first kind.
//
// PARAMETER CONVENTION: the second argument of every function is the
// parameter m (Abramowitz & Stegun, Mathematica), NOT the modulus k.
// The two are related by m = k^2.  The pendulum solutions use m = k^-2,
// which exceeds 1 in the oscillating regime; all functions accept m > 1
// through the reciprocal-modulus transformation.  Negative m is rejected.

namespace bjj::elliptic {

struct SnCnDn {
  double sn;
  double cn;
  double dn;
};

/// Complete elliptic integral of the first kind K(m), 0 <= m < 1 (AGM).
/// Throws DomainError for m >= 1.
double complete_K(double m);

/// Incomplete elliptic integral F(phi|m) = int_0^phi dtheta / sqrt(1 - m sin^2 theta).
///
/// For m <= 1 any real phi is accepted.  For m > 1 the integrand is real
/// only on |phi| <= asin(1/sqrt(m)); outside that interval DomainError is
/// thrown.
double incomplete_F(double phi, double m);

/// Jacobi amplitude am(u|m).
///
/// For m < 1 it is monotonic with am(K|m) = pi/2.  For m > 1 it is periodic
/// and bounded by asin(1/sqrt(m)).  At m = 1 it is the Gudermannian.
double jacobi_am(double u, double m);

/// sn, cn, dn at (u|m).  At m = 1 the hyperbolic closed forms are used.
SnCnDn jacobi_sn_cn_dn(double u, double m);

/// Principal inverse of sn: returns u in [-K_eff, K_eff] with sn(u|m) = x.
///
/// K_eff is K(m) for m < 1 and K(1/m)/sqrt(m) for m > 1.  Requires |x| <= 1,
/// and |x| <= 1/sqrt(m) when m > 1.  At m = 1 and |x| = 1 the result
/// diverges and DomainError is thrown.
double inv_sn(double x, double m);

/// Quarter period of sn(.|m) in u: K(m) for m < 1, K(1/m)/sqrt(m) for m > 1.
double quarter_period(double m);

}  // namespace bjj::elliptic
