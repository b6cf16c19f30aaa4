#pragma once

#include <map>
#include <string>
#include <vector>

#include "ddc/numkern.hpp"

namespace ddc {

// Exponent multi-index; one entry per variable.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& m) {
  int d = 0;
  for (int e : m) d += e;
  return d;
}

// Graded lexicographic order: lower total degree first, then lexicographic.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a < b;
  }
};

// Sparse real polynomial in n variables. Terms are kept in canonical
// graded-lex order; exact-zero coefficients are dropped.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, double, GradedLexLess>;

  explicit Polynomial(int num_vars = 0) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double c);
  static Polynomial variable(int num_vars, int i);  // x_{i+1}
  static Polynomial monomial(int num_vars, const MultiIndex& m, double c = 1.0);

  int num_vars() const { return num_vars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;      // 0 for the zero polynomial
  int min_degree() const;  // 0 for the zero polynomial

  double coeff(const MultiIndex& m) const;
  void add_term(const MultiIndex& m, double c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial& operator+=(const Polynomial& o);

  double eval(const Vector& x) const;
  Polynomial derivative(int var) const;

  // Drop terms with |coeff| <= eps.
  Polynomial pruned(double eps) const;

  // Canonical text form, e.g. "1 + -2*x1 + 1*x1^2"; round-trips via parse.
  std::string to_string() const;
  static Polynomial parse(const std::string& text, int num_vars);

  bool operator==(const Polynomial& o) const {
    return num_vars_ == o.num_vars_ && terms_ == o.terms_;
  }

 private:
  int num_vars_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

// Dense grid of polynomials.
class MatrixPolynomial {
 public:
  MatrixPolynomial() = default;
  MatrixPolynomial(int rows, int cols, int num_vars)
      : rows_(rows), cols_(cols), num_vars_(num_vars),
        entries_(static_cast<size_t>(rows) * cols, Polynomial(num_vars)) {}

  static MatrixPolynomial from_constant(const Matrix& m, int num_vars);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_vars() const { return num_vars_; }
  Polynomial& at(int i, int j) { return entries_[static_cast<size_t>(i) * cols_ + j]; }
  const Polynomial& at(int i, int j) const { return entries_[static_cast<size_t>(i) * cols_ + j]; }

  Matrix eval(const Vector& x) const;
  int degree() const;

 private:
  int rows_ = 0, cols_ = 0, num_vars_ = 0;
  std::vector<Polynomial> entries_;
};

// Canonical list of monomial multi-indices in graded-lex order.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  explicit MonomialBasis(std::vector<MultiIndex> monomials);

  // All monomials in num_vars variables with total degree in [min_deg, max_deg].
  static MonomialBasis degree_range(int num_vars, int min_deg, int max_deg);

  int size() const { return static_cast<int>(monomials_.size()); }
  const MultiIndex& operator[](int i) const { return monomials_[i]; }
  const std::vector<MultiIndex>& monomials() const { return monomials_; }
  int max_degree() const;
  int num_vars() const { return monomials_.empty() ? 0 : static_cast<int>(monomials_[0].size()); }

  Vector eval(const Vector& x) const;

 private:
  std::vector<MultiIndex> monomials_;
};

// Spec'd operation aliases.
double poly_eval(const Polynomial& p, const Vector& x);
std::vector<Polynomial> poly_grad(const Polynomial& p);

}  // namespace ddc
