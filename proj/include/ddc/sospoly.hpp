#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ddc/conic.hpp"
#include "ddc/dataio.hpp"
#include "ddc/ellipsoid.hpp"
#include "ddc/parallel.hpp"
#include "ddc/polynomial.hpp"

namespace ddc {

// Polynomial whose coefficients depend affinely on scalar decision
// variables: c0(x) + sum_v var_v * mult_v(x).
struct AffinePoly {
  Polynomial c0;
  std::vector<std::pair<int, Polynomial>> lin;

  explicit AffinePoly(int num_vars = 0) : c0(num_vars) {}
  static AffinePoly fixed(const Polynomial& p);
  void add(const AffinePoly& o);
  void add_fixed(const Polynomial& p);
  AffinePoly times(const Polynomial& fixed_factor) const;
  AffinePoly scaled(double s) const;
  Polynomial evaluate(const Vector& decision_values) const;  // indexed by var id
  int num_x() const { return c0.num_vars(); }
};

// PSD Gram witness: the target matrix polynomial equals B(x)' G B(x), where
// B stacks one monomial vector per target row (a single vector for scalar
// targets).
struct GramCertificate {
  std::vector<MonomialBasis> row_bases;
  SymMatrix G;
  MatrixPolynomial target;
  double min_eig = 0.0;

  MatrixPolynomial reproduce() const;
  double reproduction_error() const;  // max absolute coefficient mismatch
};

struct SosOutcome {
  std::optional<GramCertificate> certificate;  // nullopt: not a sum of squares
  SdpStatus status = SdpStatus::NumericalFailure;
};

// Gram feasibility over an explicit basis (uniform across rows for matrix
// targets). Throws BasisTooSmall when the target degree exceeds twice the
// basis degree.
SosOutcome sos_decompose(const Polynomial& p, const MonomialBasis& basis,
                         const SolverOptions& opts = {});
SosOutcome sos_decompose(const MatrixPolynomial& p, const MonomialBasis& basis,
                         const SolverOptions& opts = {});

struct DegreeWindow {
  int lo = 0;
  int hi = 0;
};

struct PolyDegrees {
  DegreeWindow V{2, 4};
  DegreeWindow k{1, 3};
  DegreeWindow lambda{0, 4};
  DegreeWindow l2{2, 4};
  DegreeWindow s1{0, 2};
  DegreeWindow s2{0, 2};
};

// Exactly one side of the bilinear program is fixed per solve.
struct FixedV {
  Polynomial V;
};
struct FixedKLambda {
  std::vector<Polynomial> k;
  Polynomial lambda;
};
using FixedSide = std::variant<FixedV, FixedKLambda>;

// Compiled SOS feasibility program plus everything needed to decode a
// solver point back into polynomials and Gram witnesses.
struct SosProgram {
  SdpProblem problem;
  bool inconsistent = false;   // coefficient matching already impossible
  double build_residual = 0.0;

  struct DecisionSlot {
    std::string name;
    MonomialBasis support;
    int offset = 0;
  };
  struct Constraint {
    std::string tag;
    int rows = 0;
    std::vector<MonomialBasis> bases;
    std::vector<AffinePoly> entries;  // row-major, rows x rows
    int gram_offset = 0;              // into the full variable vector
    int side = 0;
  };
  std::vector<DecisionSlot> decisions;
  std::vector<Constraint> constraints;
  int num_x = 0;  // polynomial variables
  int num_coeff_vars = 0;
  Vector particular;
  Matrix null_basis;

  struct Decoded {
    std::map<std::string, Polynomial> polys;
    std::vector<GramCertificate> grams;
  };
  Decoded decode(const Vector& x) const;
};

// Global asymptotic stabilization program: the negated decrease block as a
// matrix SOS membership, lambda - eps_lambda in S, and l2 - eps_l2*|x|^2 in
// S, with l2 always a decision polynomial. Throws BilinearityError when the
// fixed side leaves a bilinear term.
SosProgram build_global_program(const MatrixEllipsoid& set, const PolyRegressors& reg,
                                const PolyDegrees& degrees, const Polynomial& l1,
                                double eps_lambda, const FixedSide& fixed,
                                double eps_l2 = 1e-6);

// Local variant over the sublevel set {l0 <= c}: adds SOS multipliers s1
// (positivity, V side) and s2 (decrease, both sides).
SosProgram build_local_program(const MatrixEllipsoid& set, const PolyRegressors& reg,
                               const PolyDegrees& degrees, const Polynomial& l0, double c,
                               const Polynomial& l1, double eps_lambda, const FixedSide& fixed,
                               double eps_l2 = 1e-6);

struct SosProgramSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::optional<SosProgram::Decoded> decoded;
  int iterations = 0;
};

// Run the conic solver on a compiled program and decode on feasibility.
SosProgramSolution solve_program(const SosProgram& prog, const SolverOptions& opts = {});

struct PolyCertificate {
  Polynomial V;
  std::vector<Polynomial> k;
  Polynomial lambda;
  Polynomial l2;
  Polynomial l1;  // design parameter kept for verification
  double eps_lambda = 0.0;
  std::optional<Polynomial> s1, s2;
  double c = 0.0;  // local variant only
  std::vector<GramCertificate> gram_witnesses;
  PolyDegrees degrees;
};

struct AlternationConfig {
  PolyDegrees degrees;
  Polynomial l1;
  double eps_lambda = 1e-3;
  double eps_l2 = 1e-6;
  int max_iterations = 15;
  // stop as soon as a full certificate exists (the cap is an upper bound);
  // otherwise run all iterations like the reference procedure
  bool stop_on_certificate = true;
  Polynomial v_init;
  SolverOptions solver;
};

struct AlternationResult {
  std::optional<PolyCertificate> certificate;
  int iterations = 0;
  std::string diagnostics;
};

// Alternate between the (k, lambda) half-program with V fixed and the V
// half-program with (k, lambda) fixed, starting from v_init.
AlternationResult alternate_synthesis(const MatrixEllipsoid& set, const PolyRegressors& reg,
                                      const AlternationConfig& config);

struct GridSpec {
  double lo = -2.0;
  double hi = 2.0;
  int points = 21;  // per axis
};

struct PolyVerifyReport {
  double min_v_margin = 0.0;       // min over the grid of V - l1
  double min_lambda_margin = 0.0;  // min over the grid of lambda - eps_lambda
  double worst_decrease = 0.0;     // max over grid x models of <gradV, f> + l2
  int grid_points = 0;
  int models = 0;

  bool clean(double tol = 1e-7) const {
    return min_v_margin >= -tol && min_lambda_margin >= -tol && worst_decrease <= tol;
  }
};

// Grid check of the certificate conditions over sampled consistent models
// plus the pointwise worst-case boundary models.
PolyVerifyReport verify_poly(const MatrixEllipsoid& set, const PolyCertificate& cert,
                             const PolyRegressors& reg, const GridSpec& grid, int model_samples,
                             std::uint64_t seed, ExecMode exec = ExecMode::OpenMP);

std::string poly_certificate_to_json(const PolyCertificate& cert);
PolyCertificate poly_certificate_from_json(const std::string& text);

// x' M x as a polynomial (used to seed V from a linear certificate).
Polynomial quadratic_form_poly(const Matrix& m);

}  // namespace ddc
