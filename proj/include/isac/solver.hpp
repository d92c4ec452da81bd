#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>

#include "isac/sensing.hpp"

namespace isac {

/// Sign of the dual term in the global averaging step. kConsistent is the
/// minimiser of the augmented Lagrangian, z = mean(z_s) + mean(gamma_s)/beta.
/// kAsPrinted subtracts the dual mean instead. Kept for comparison runs only:
/// its fixed points are not stationary for the LASSO objective.
enum class DualAveraging { kConsistent, kAsPrinted };

DualAveraging parse_dual_averaging(std::string_view name);
std::string_view to_string(DualAveraging mode);

struct AdmmParams {
  double alpha = 1.8;
  double beta = 100.0;
  std::size_t iterations = 50;
  /// Early stop when both residuals fall below these; 0 disables.
  double primal_tol = 0.0;
  double dual_tol = 0.0;
  DualAveraging dual_averaging = DualAveraging::kConsistent;
  /// Record the objective after every iteration.
  bool trace_objective = false;

  void validate() const;
};

/// Complex soft threshold: z * max(0, 1 - kappa/|z|).
cdouble soft_threshold(cdouble z, double kappa);
CVector soft_threshold(const CVector& z, double kappa);

/// Cached solver for the ridge system (Phi^H Phi + beta I) z = rhs of one
/// sensing problem. Factorises once at construction.
class LocalUpdate {
 public:
  LocalUpdate(const SensingProblem& problem, double beta);

  /// z_s = (Phi^H Phi + beta I)^{-1} (Phi^H y + beta z_G - gamma_s).
  [[nodiscard]] CVector operator()(const CVector& global, const CVector& dual) const;

  [[nodiscard]] const CVector& projected_observation() const { return phi_h_y_; }
  [[nodiscard]] const CMatrix& system() const { return system_; }

 private:
  double beta_;
  CMatrix system_;
  CVector phi_h_y_;
  Eigen::LLT<CMatrix> factor_;
};

CVector local_update(const SensingProblem& problem, const CVector& global,
                     const CVector& dual, double beta);

/// z_G = S_{alpha/(beta S)}(mean(z_s) +/- mean(gamma_s)/beta).
CVector global_update(const std::vector<CVector>& locals,
                      const std::vector<CVector>& duals, double alpha,
                      double beta, DualAveraging mode = DualAveraging::kConsistent);

/// gamma_s + beta (z_s - z_G).
CVector dual_update(const CVector& dual, const CVector& local,
                    const CVector& global, double beta);

/// Objective minimised by the iteration:
/// sum_s 0.5 ||y_s - Phi_s z||^2 + alpha ||z||_1.
double consensus_objective(const std::vector<SensingProblem>& problems,
                           const CVector& z, double alpha);

struct SolveReport {
  CVector global;
  std::vector<CVector> locals;
  std::vector<CVector> duals;
  double primal_residual = 0.0;  // sum_s ||z_s - z_G||
  double dual_residual = 0.0;    // beta sqrt(S) ||z_G - z_G_prev||
  std::size_t iterations_run = 0;
  std::vector<double> objective_trace;
  std::vector<double> primal_trace;
};

/// Consensus ADMM from a zero start: each round performs every local
/// update, one global soft-threshold step and every dual update.
SolveReport solve(const std::vector<SensingProblem>& problems,
                  const AdmmParams& params);

struct OracleResult {
  CVector z;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// Proximal gradient (ISTA) on ||y - Phi z||^2 + alpha ||z||_1 with step
/// 1 / (2 lambda_max(Phi^H Phi)). Stops when the relative objective change
/// drops below `tol`; `converged` is false if `max_iter` was hit first.
OracleResult oracle_lasso(const CMatrix& phi, const CVector& y, double alpha,
                          std::size_t max_iter, double tol);

/// Largest eigenvalue of Phi^H Phi by power iteration.
double largest_gram_eigenvalue(const CMatrix& phi, std::size_t max_iter = 1000,
                               double tol = 1e-12);

}  // namespace isac
