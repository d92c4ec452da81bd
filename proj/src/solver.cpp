#include "isac/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace isac {

DualAveraging parse_dual_averaging(std::string_view name) {
  if (name == "consistent") return DualAveraging::kConsistent;
  if (name == "as-printed") return DualAveraging::kAsPrinted;
  throw std::invalid_argument("unknown dual averaging mode '" + std::string(name) + "'");
}

std::string_view to_string(DualAveraging mode) {
  return mode == DualAveraging::kConsistent ? "consistent" : "as-printed";
}

void AdmmParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (iterations < 1) throw std::invalid_argument("need at least one ADMM iteration");
  if (primal_tol < 0.0 || dual_tol < 0.0) throw std::invalid_argument("tolerances must be >= 0");
}

cdouble soft_threshold(cdouble z, double kappa) {
  const double mag = std::abs(z);
  if (mag <= kappa) return 0.0;
  return z * ((mag - kappa) / mag);
}

CVector soft_threshold(const CVector& z, double kappa) {
  CVector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = soft_threshold(z(i), kappa);
  return out;
}

LocalUpdate::LocalUpdate(const SensingProblem& problem, double beta)
    : beta_(beta) {
  if (problem.phi.rows() != problem.y.size()) {
    throw std::invalid_argument("sensing matrix and observation sizes disagree");
  }
  const Eigen::Index n = problem.phi.cols();
  system_ = problem.phi.adjoint() * problem.phi;
  system_.diagonal().array() += beta;
  phi_h_y_ = problem.phi.adjoint() * problem.y;
  factor_.compute(system_);
  if (factor_.info() != Eigen::Success) {
    throw std::logic_error("Cholesky factorisation of the local system failed (n=" +
                           std::to_string(n) + ")");
  }
}

CVector LocalUpdate::operator()(const CVector& global, const CVector& dual) const {
  return factor_.solve(phi_h_y_ + beta_ * global - dual);
}

CVector local_update(const SensingProblem& problem, const CVector& global,
                     const CVector& dual, double beta) {
  return LocalUpdate(problem, beta)(global, dual);
}

CVector global_update(const std::vector<CVector>& locals,
                      const std::vector<CVector>& duals, double alpha,
                      double beta, DualAveraging mode) {
  if (locals.empty() || locals.size() != duals.size()) {
    throw std::invalid_argument("global update needs matching locals and duals");
  }
  const double s = static_cast<double>(locals.size());
  CVector local_sum = CVector::Zero(locals.front().size());
  CVector dual_sum = CVector::Zero(locals.front().size());
  for (std::size_t j = 0; j < locals.size(); ++j) {
    local_sum += locals[j];
    dual_sum += duals[j];
  }
  const double sign = mode == DualAveraging::kConsistent ? 1.0 : -1.0;
  const CVector average = local_sum / s + (sign / (beta * s)) * dual_sum;
  return soft_threshold(average, alpha / (beta * s));
}

CVector dual_update(const CVector& dual, const CVector& local,
                    const CVector& global, double beta) {
  return dual + beta * (local - global);
}

double consensus_objective(const std::vector<SensingProblem>& problems,
                           const CVector& z, double alpha) {
  double value = alpha * z.cwiseAbs().sum();
  for (const SensingProblem& p : problems) {
    value += 0.5 * (p.y - p.phi * z).squaredNorm();
  }
  return value;
}

SolveReport solve(const std::vector<SensingProblem>& problems,
                  const AdmmParams& params) {
  params.validate();
  if (problems.empty()) throw std::invalid_argument("solve needs at least one sensing problem");
  const Eigen::Index n = problems.front().phi.cols();
  for (const SensingProblem& p : problems) {
    if (p.phi.cols() != n) throw std::invalid_argument("sensing problems disagree on grid size");
  }

  std::vector<LocalUpdate> updates;
  updates.reserve(problems.size());
  for (const SensingProblem& p : problems) updates.emplace_back(p, params.beta);

  SolveReport report;
  report.global = CVector::Zero(n);
  report.locals.assign(problems.size(), CVector::Zero(n));
  report.duals.assign(problems.size(), CVector::Zero(n));
  const double root_s = std::sqrt(static_cast<double>(problems.size()));

  for (std::size_t t = 0; t < params.iterations; ++t) {
    for (std::size_t j = 0; j < problems.size(); ++j) {
      report.locals[j] = updates[j](report.global, report.duals[j]);
    }
    CVector next = global_update(report.locals, report.duals, params.alpha,
                                 params.beta, params.dual_averaging);
    report.dual_residual = params.beta * root_s * (next - report.global).norm();
    report.global = std::move(next);

    report.primal_residual = 0.0;
    for (std::size_t j = 0; j < problems.size(); ++j) {
      report.duals[j] = dual_update(report.duals[j], report.locals[j],
                                    report.global, params.beta);
      report.primal_residual += (report.locals[j] - report.global).norm();
    }
    report.iterations_run = t + 1;
    report.primal_trace.push_back(report.primal_residual);
    if (params.trace_objective) {
      report.objective_trace.push_back(
          consensus_objective(problems, report.global, params.alpha));
    }
    if (params.primal_tol > 0.0 && params.dual_tol > 0.0 &&
        report.primal_residual < params.primal_tol &&
        report.dual_residual < params.dual_tol) {
      break;
    }
  }
  return report;
}

double largest_gram_eigenvalue(const CMatrix& phi, std::size_t max_iter, double tol) {
  if (phi.cols() == 0) return 0.0;
  CVector v = CVector::Ones(phi.cols()).normalized();
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    CVector w = phi.adjoint() * (phi * v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - lambda) <= tol * next) return next;
    lambda = next;
  }
  return lambda;
}

OracleResult oracle_lasso(const CMatrix& phi, const CVector& y, double alpha,
                          std::size_t max_iter, double tol) {
  if (phi.rows() != y.size()) throw std::invalid_argument("oracle: shape mismatch");
  auto objective = [&](const CVector& z) {
    return (y - phi * z).squaredNorm() + alpha * z.cwiseAbs().sum();
  };

  OracleResult result;
  result.z = CVector::Zero(phi.cols());
  result.objective = objective(result.z);
  const double lipschitz = 2.0 * largest_gram_eigenvalue(phi);
  if (lipschitz == 0.0) {
    result.converged = true;
    return result;
  }
  // Power iteration can undershoot slightly; a small margin keeps the step
  // inside the convergent range.
  const double step = 1.0 / (lipschitz * (1.0 + 1e-9));

  for (std::size_t it = 0; it < max_iter; ++it) {
    const CVector gradient = 2.0 * (phi.adjoint() * (phi * result.z - y));
    result.z = soft_threshold(result.z - step * gradient, alpha * step);
    const double next = objective(result.z);
    const double change = std::abs(result.objective - next);
    result.objective = next;
    result.iterations = it + 1;
    if (change <= tol * std::max(next, 1e-300)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace isac
