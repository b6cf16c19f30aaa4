#pragma once

#include <cstdint>
#include <vector>

#include "ddc/conic.hpp"
#include "ddc/dataio.hpp"
#include "ddc/numkern.hpp"

namespace ddc {

struct SolverInfeasible : Error {
  using Error::Error;
};

// Matrix ellipsoid { Z : (Z - Zc)' A (Z - Zc) <= Q } over p x n matrices Z
// with [A_sys B_sys] = Z'. Kept in the quadratic-form parametrization
// (bigA, bigB, bigC); center and shape are cached at construction:
//   Zc = -bigA^{-1} bigB,   Q = bigB' bigA^{-1} bigB - bigC.
struct MatrixEllipsoid {
  SymMatrix bigA;   // p x p, positive definite
  Matrix bigB;      // p x n
  SymMatrix bigC;   // n x n
  Matrix center;    // Zc, p x n
  SymMatrix shape;  // Q, n x n

  int n() const { return static_cast<int>(bigB.cols()); }
  int p() const { return bigA.dim(); }
};

enum class Provenance { Center, BoundarySample, InteriorSample, Explicit };

struct ConsistentModel {
  Matrix Z;  // p x n; the dynamics are [A B] = Z'
  Provenance provenance = Provenance::Explicit;
};

// Build an ellipsoid from its quadratic-form blocks, validating bigA > 0 and
// caching center/shape. Throws RankDeficient when bigA is not positive
// definite at tolerance.
MatrixEllipsoid make_ellipsoid(const SymMatrix& bigA, const Matrix& bigB, const SymMatrix& bigC);

// Set of dynamics consistent with the data under the energy bound; requires
// the regressor stack to have full row rank.
MatrixEllipsoid consistency_set(const DataMatrices& dm);

// Least-squares estimate Zc' = X1 * pinv(stack); coincides with the
// consistency-set center whenever the rank check passes.
Matrix ls_center(const DataMatrices& dm);

bool contains(const MatrixEllipsoid& e, const Matrix& z, double tol = 1e-9);

enum class SampleMode { Boundary, Interior };

// Draw members Zc + A^{-1/2} U Q^{1/2}; boundary mode uses ||U|| = 1,
// interior mode scales by a uniform radius. Deterministic per (seed, index).
std::vector<ConsistentModel> sample(const MatrixEllipsoid& e, int count, SampleMode mode,
                                    std::uint64_t seed);

// (det Q)^(p/2) * (det A)^(-n/2); zero when Q is singular.
double size_measure(const MatrixEllipsoid& e);

// Explicit norm bound: every member satisfies
// ||Z|| <= ||Zc|| + lambda_min(A)^{-1/2} * ||Q^{1/2}||.
double norm_bound(const MatrixEllipsoid& e);

// Constructive unit-ball factor for a member Z: the U with ||U|| <= 1 and
// Z = Zc + A^{-1/2} U Q^{1/2}, built from the truncated eigendecomposition
// of Q^{1/2} (valid also for singular Q). rank_tol is applied to the
// eigenvalues of Q; negative selects 1e-9 * max(1, lambda_max(Q)).
Matrix boundary_factor(const MatrixEllipsoid& e, const Matrix& z, double rank_tol = -1.0);

// One data point for the instantaneous-bound over-approximation:
// successor k0 = A*regressor + B*input + d with |d|^2 <= delta.
struct OverapproxPoint {
  Vector successor;  // n
  Vector regressor;  // state (linear) or Z(x) (polynomial)
  Vector input;      // u or W(x)u
};

// Minimum-volume (max log-det of bigA) matrix ellipsoid containing every
// model consistent with all points. Returns an ellipsoid with Q = I via
// bigC := bigB' bigA^{-1} bigB - I.
MatrixEllipsoid overapproximate(const std::vector<OverapproxPoint>& points, double delta,
                                const SolverOptions& opts = {});

std::string ellipsoid_to_json(const MatrixEllipsoid& e);
MatrixEllipsoid ellipsoid_from_json(const std::string& text);

}  // namespace ddc
