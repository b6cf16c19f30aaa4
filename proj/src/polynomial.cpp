#include "ddc/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace ddc {

Polynomial Polynomial::constant(int num_vars, double c) {
  Polynomial p(num_vars);
  p.add_term(MultiIndex(num_vars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int i) {
  if (i < 0 || i >= num_vars) throw DimensionError("Polynomial::variable: index out of range");
  MultiIndex m(num_vars, 0);
  m[i] = 1;
  return monomial(num_vars, m);
}

Polynomial Polynomial::monomial(int num_vars, const MultiIndex& m, double c) {
  Polynomial p(num_vars);
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : total_degree(terms_.rbegin()->first);
}

int Polynomial::min_degree() const {
  return terms_.empty() ? 0 : total_degree(terms_.begin()->first);
}

double Polynomial::coeff(const MultiIndex& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const MultiIndex& m, double c) {
  if (static_cast<int>(m.size()) != num_vars_)
    throw DimensionError("Polynomial::add_term: multi-index length mismatch");
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) it->second += c;
  if (it->second == 0.0) terms_.erase(it);
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (num_vars_ != o.num_vars_) throw DimensionError("polynomial variable count mismatch");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (num_vars_ != o.num_vars_) throw DimensionError("polynomial variable count mismatch");
  Polynomial r(num_vars_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      MultiIndex m(num_vars_);
      for (int i = 0; i < num_vars_; ++i) m[i] = ma[i] + mb[i];
      r.add_term(m, ca * cb);
    }
  }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(num_vars_);
  if (s == 0.0) return r;
  for (const auto& [m, c] : terms_) r.terms_[m] = c * s;
  return r;
}

double Polynomial::eval(const Vector& x) const {
  if (x.size() != num_vars_) throw DimensionError("Polynomial::eval: point dimension mismatch");
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < num_vars_; ++i)
      for (int e = 0; e < m[i]; ++e) t *= x(i);
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial r(num_vars_);
  for (const auto& [m, c] : terms_) {
    if (m[var] == 0) continue;
    MultiIndex d = m;
    d[var] -= 1;
    r.add_term(d, c * m[var]);
  }
  return r;
}

Polynomial Polynomial::pruned(double eps) const {
  Polynomial r(num_vars_);
  for (const auto& [m, c] : terms_)
    if (std::abs(c) > eps) r.terms_[m] = c;
  return r;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (int i = 0; i < num_vars_; ++i) {
      if (m[i] == 0) continue;
      os << "*x" << (i + 1);
      if (m[i] > 1) os << "^" << m[i];
    }
  }
  return os.str();
}

Polynomial Polynomial::parse(const std::string& text, int num_vars) {
  Polynomial p(num_vars);
  const char* s = text.c_str();
  auto skip_ws = [&] { while (*s && std::isspace(static_cast<unsigned char>(*s))) ++s; };
  skip_ws();
  if (*s == '\0') throw ParseError("polynomial: empty input");
  bool expect_term = true;
  double pending_sign = 1.0;
  while (*s) {
    skip_ws();
    if (!*s) break;
    if (*s == '+') { ++s; expect_term = true; continue; }
    if (*s == '-' && expect_term == false) { ++s; pending_sign = -pending_sign; expect_term = true; continue; }
    // term: [sign][coef][*x<i>[^e]]...
    double coef = pending_sign;
    pending_sign = 1.0;
    bool have_factor = false;
    while (*s == '+' || *s == '-') {
      if (*s == '-') coef = -coef;
      ++s;
      skip_ws();
    }
    if (std::isdigit(static_cast<unsigned char>(*s)) || *s == '.') {
      char* end = nullptr;
      double v = std::strtod(s, &end);
      if (end == s) throw ParseError("polynomial: bad number near '" + std::string(s).substr(0, 8) + "'");
      coef *= v;
      s = end;
      have_factor = true;
    }
    MultiIndex m(num_vars, 0);
    while (true) {
      skip_ws();
      if (*s == '*') { ++s; skip_ws(); }
      if (*s != 'x') break;
      ++s;
      char* end = nullptr;
      long idx = std::strtol(s, &end, 10);
      if (end == s || idx < 1 || idx > num_vars)
        throw ParseError("polynomial: bad variable index");
      s = end;
      int exp = 1;
      if (*s == '^') {
        ++s;
        long e = std::strtol(s, &end, 10);
        if (end == s || e < 0) throw ParseError("polynomial: bad exponent");
        exp = static_cast<int>(e);
        s = end;
      }
      m[static_cast<int>(idx - 1)] += exp;
      have_factor = true;
    }
    if (!have_factor) throw ParseError("polynomial: expected a term");
    p.add_term(m, coef);
    expect_term = false;
  }
  return p;
}

MatrixPolynomial MatrixPolynomial::from_constant(const Matrix& m, int num_vars) {
  MatrixPolynomial r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), num_vars);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) r.at(i, j) = Polynomial::constant(num_vars, m(i, j));
  return r;
}

Matrix MatrixPolynomial::eval(const Vector& x) const {
  Matrix r(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(i, j) = at(i, j).eval(x);
  return r;
}

int MatrixPolynomial::degree() const {
  int d = 0;
  for (const auto& p : entries_) d = std::max(d, p.degree());
  return d;
}

MonomialBasis::MonomialBasis(std::vector<MultiIndex> monomials) : monomials_(std::move(monomials)) {
  std::sort(monomials_.begin(), monomials_.end(), GradedLexLess{});
  monomials_.erase(std::unique(monomials_.begin(), monomials_.end()), monomials_.end());
}

namespace {
void enumerate_degree(int num_vars, int var, int remaining, MultiIndex& cur,
                      std::vector<MultiIndex>& out) {
  if (var == num_vars - 1) {
    cur[var] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[var] = e;
    enumerate_degree(num_vars, var + 1, remaining - e, cur, out);
  }
  cur[var] = 0;
}
}  // namespace

MonomialBasis MonomialBasis::degree_range(int num_vars, int min_deg, int max_deg) {
  if (min_deg < 0 || max_deg < min_deg)
    throw DomainError("MonomialBasis: bad degree window");
  std::vector<MultiIndex> out;
  MultiIndex cur(num_vars, 0);
  for (int d = min_deg; d <= max_deg; ++d) enumerate_degree(num_vars, 0, d, cur, out);
  return MonomialBasis(std::move(out));
}

int MonomialBasis::max_degree() const {
  int d = 0;
  for (const auto& m : monomials_) d = std::max(d, total_degree(m));
  return d;
}

Vector MonomialBasis::eval(const Vector& x) const {
  Vector v(size());
  for (int i = 0; i < size(); ++i) {
    double t = 1.0;
    for (size_t k = 0; k < monomials_[i].size(); ++k)
      for (int e = 0; e < monomials_[i][k]; ++e) t *= x(static_cast<int>(k));
    v(i) = t;
  }
  return v;
}

double poly_eval(const Polynomial& p, const Vector& x) { return p.eval(x); }

std::vector<Polynomial> poly_grad(const Polynomial& p) {
  std::vector<Polynomial> g;
  g.reserve(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) g.push_back(p.derivative(i));
  return g;
}

}  // namespace ddc
