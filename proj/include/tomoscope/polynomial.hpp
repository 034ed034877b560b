#pragma once

// Sparse multivariate polynomials (up to 3 variables) with exact gradients and
// Hessians, and the homogeneous harmonic bases used to perturb spheres.

#include "tomoscope/geom.hpp"

#include <array>
#include <map>
#include <string>

namespace tomo {

class Polynomial {
 public:
  using Exponents = std::array<int, 3>;

  explicit Polynomial(int vars = 3) : vars_(vars) {}
  static Polynomial constant(int vars, double c);
  static Polynomial variable(int vars, int index);

  int vars() const { return vars_; }
  /// Highest total degree with a nonzero coefficient (0 for the zero polynomial).
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double>& terms() const { return terms_; }
  void add_term(const Exponents& e, double coef);

  double eval(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

 private:
  int vars_;
  std::map<Exponents, double> terms_;
};

/// Re and Im of (x + i y)^k as polynomials in `vars` variables.
std::pair<Polynomial, Polynomial> complex_power(int vars, int k);

/// Planar harmonic of index m: Re (x+iy)^m for m >= 0, Im (x+iy)^|m| for m < 0.
/// Homogeneous of degree |m|.
Polynomial planar_harmonic(int m);

/// Regular solid harmonic r^l Y_l^m (real form, unnormalized) in x, y, z:
/// m >= 0 uses cos(m phi), m < 0 uses sin(|m| phi). Homogeneous of degree l,
/// harmonic (zero Laplacian).
Polynomial solid_harmonic(int l, int m);

/// Laplacian, used to certify harmonicity in tests.
Polynomial laplacian(const Polynomial& p);

}  // namespace tomo
