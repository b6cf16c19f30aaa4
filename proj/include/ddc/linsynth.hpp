#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ddc/conic.hpp"
#include "ddc/dataio.hpp"
#include "ddc/ellipsoid.hpp"

namespace ddc {

// The two equivalent encodings of the synthesis LMI: directly in the
// quadratic-form blocks (bigA, bigB, bigC), or in center/shape (Zc, Q).
enum class LmiForm { BlockABC, CenterShape };

struct LinearCertificate {
  TimeMode mode = TimeMode::DiscreteTime;
  Matrix K;  // m x n, K = Y * P^{-1}
  Matrix P;  // n x n, positive definite Lyapunov shape
  Matrix Y;  // m x n
  double lmi_residual = 0.0;  // max eigenvalue of the unshifted synthesis LMI
};

struct SynthResult {
  std::optional<LinearCertificate> certificate;
  SdpStatus status = SdpStatus::NumericalFailure;
  // converged phase-1 margin when infeasible: how far the data-consistent
  // set is from quadratic stabilizability
  double infeasibility_margin = 0.0;
  int iterations = 0;
};

// State-feedback synthesis robust over every model in the consistency set.
// Feasibility of the LMI is equivalent to quadratic stabilizability of the
// whole set, so Infeasible is an answer, not an error.
SynthResult synth_dt(const MatrixEllipsoid& e, LmiForm form = LmiForm::BlockABC,
                     const SolverOptions& opts = {});
SynthResult synth_ct(const MatrixEllipsoid& e, LmiForm form = LmiForm::BlockABC,
                     const SolverOptions& opts = {});

struct RobustVerifyReport {
  double center_residual = 0.0;   // Lyapunov inequality at the center model
  double worst_residual = 0.0;    // max over all tested models
  double true_residual = 0.0;     // at the true model when provided
  double worst_closed_loop = 0.0; // max spectral radius (DT) / abscissa (CT)
  int violations = 0;             // models with residual > 0
  int models_tested = 0;
};

// Evaluate the Lyapunov matrix inequality of the certificate at the center,
// at sampled consistency-set models (half boundary, half interior), and at
// the true model when given. Sampling is deterministic per (seed, index),
// so Serial and OpenMP execution agree bitwise.
RobustVerifyReport verify_robust(const MatrixEllipsoid& e, const LinearCertificate& cert,
                                 int samples, std::uint64_t seed,
                                 ExecMode exec = ExecMode::OpenMP,
                                 const std::optional<Matrix>& true_model = std::nullopt);

// Residual of the Lyapunov inequality for one model Z' = [A B]:
// DT: (A+BK) P (A+BK)' - P,  CT: (A+BK) P + P (A+BK)'.
double lyapunov_residual(const LinearCertificate& cert, const Matrix& z);

// Spectral radius (DT) or spectral abscissa (CT) of the closed loop A + B K.
double closed_loop_measure(const LinearCertificate& cert, const Matrix& z);

std::string certificate_to_json(const LinearCertificate& cert);
LinearCertificate certificate_from_json(const std::string& text);

}  // namespace ddc
