#include "tomoscope/polynomial.hpp"

#include "tomoscope/errors.hpp"

#include <cmath>

namespace tomo {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace

Polynomial Polynomial::constant(int vars, double c) {
  Polynomial p(vars);
  p.add_term({0, 0, 0}, c);
  return p;
}

Polynomial Polynomial::variable(int vars, int index) {
  if (index < 0 || index >= vars) throw InputError("polynomial variable index out of range");
  Polynomial p(vars);
  Exponents e{0, 0, 0};
  e[index] = 1;
  p.add_term(e, 1.0);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
  return d;
}

void Polynomial::add_term(const Exponents& e, double coef) {
  if (coef == 0.0) return;
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    terms_.emplace(e, coef);
    return;
  }
  it->second += coef;
  if (std::abs(it->second) < 1e-300) terms_.erase(it);
}

double Polynomial::eval(const Vec& x) const {
  double s = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int i = 0; i < vars_; ++i) t *= ipow(x[i], e[i]);
    s += t;
  }
  return s;
}

Vec Polynomial::gradient(const Vec& x) const {
  Vec g = Vec::Zero(vars_);
  for (const auto& [e, c] : terms_)
    for (int i = 0; i < vars_; ++i) {
      if (e[i] == 0) continue;
      double t = c * e[i];
      for (int j = 0; j < vars_; ++j) t *= ipow(x[j], j == i ? e[j] - 1 : e[j]);
      g[i] += t;
    }
  return g;
}

Mat Polynomial::hessian(const Vec& x) const {
  Mat h = Mat::Zero(vars_, vars_);
  for (const auto& [e, c] : terms_)
    for (int i = 0; i < vars_; ++i)
      for (int k = i; k < vars_; ++k) {
        Exponents d = e;
        double t = c;
        t *= d[i];
        --d[i];
        if (t == 0.0) continue;
        t *= d[k];
        --d[k];
        if (t == 0.0) continue;
        for (int j = 0; j < vars_; ++j) t *= ipow(x[j], d[j]);
        h(i, k) += t;
        if (k != i) h(k, i) += t;
      }
  return h;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [e, c] : o.terms_) r.add_term(e, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(std::max(vars_, o.vars_));
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) r.add_term({e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]}, c1 * c2);
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(vars_);
  for (const auto& [e, c] : terms_) r.add_term(e, c * s);
  return r;
}

std::pair<Polynomial, Polynomial> complex_power(int vars, int k) {
  if (k < 0) throw InputError("complex_power: negative exponent");
  Polynomial re(vars), im(vars);
  // (x + i y)^k = sum_j C(k, j) x^(k-j) (i y)^j
  for (int j = 0; j <= k; ++j) {
    const double c = binomial(k, j);
    const Polynomial::Exponents e{k - j, j, 0};
    switch (j % 4) {
      case 0: re.add_term(e, c); break;
      case 1: im.add_term(e, c); break;
      case 2: re.add_term(e, -c); break;
      case 3: im.add_term(e, -c); break;
    }
  }
  return {re, im};
}

Polynomial planar_harmonic(int m) {
  auto [re, im] = complex_power(2, std::abs(m));
  return m >= 0 ? re : im;
}

Polynomial solid_harmonic(int l, int m) {
  if (l < 0 || std::abs(m) > l) throw InputError("solid_harmonic: need |m| <= l");
  const int am = std::abs(m);
  const Polynomial z = Polynomial::variable(3, 2);
  const Polynomial r2 = Polynomial::variable(3, 0) * Polynomial::variable(3, 0) +
                        Polynomial::variable(3, 1) * Polynomial::variable(3, 1) + z * z;
  // Pi_l^m(z, r) = sum_k (-1)^k 2^-l C(l,k) C(2l-2k, l) (l-2k)!/(l-2k-m)! r^2k z^(l-2k-m)
  Polynomial pi(3);
  for (int k = 0; k <= (l - am) / 2; ++k) {
    const double coef = (k % 2 ? -1.0 : 1.0) * std::ldexp(1.0, -l) * binomial(l, k) *
                        binomial(2 * l - 2 * k, l) * factorial(l - 2 * k) / factorial(l - 2 * k - am);
    Polynomial term = Polynomial::constant(3, coef);
    for (int i = 0; i < k; ++i) term = term * r2;
    for (int i = 0; i < l - 2 * k - am; ++i) term = term * z;
    pi = pi + term;
  }
  auto [re, im] = complex_power(3, am);
  return pi * (m >= 0 ? re : im);
}

Polynomial laplacian(const Polynomial& p) {
  Polynomial r(p.vars());
  for (const auto& [e, c] : p.terms())
    for (int i = 0; i < p.vars(); ++i) {
      if (e[i] < 2) continue;
      Polynomial::Exponents d = e;
      d[i] -= 2;
      r.add_term(d, c * e[i] * (e[i] - 1));
    }
  return r;
}

}  // namespace tomo
