#pragma once

// Dense linear-algebra primitives shared by every policy: the regularized
// design matrix, weighted norms, ridge solves, V^{-1/2} and the weight rows
// V^{-1/2} X^T that drive the truncated estimator.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "linbet/errors.hpp"

namespace linbet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace tol {
inline constexpr double kSymmetry = 1e-10;
inline constexpr double kInverse = 1e-8;
inline constexpr double kMinEigen = 1e-9;
inline constexpr double kNegativeQuadClamp = 1e-12;
}  // namespace tol

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Regularized Gram matrix V_t = lambda*I + sum x x^T with a maintained inverse.
///
/// The inverse is kept current by Sherman-Morrison rank-one updates and is
/// rebuilt from a Cholesky factorization of V every kRefactorPeriod updates
/// so roundoff cannot accumulate.
class DesignState {
 public:
  static constexpr std::size_t kRefactorPeriod = 256;

  DesignState(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
    if (dim == 0) throw InvalidInput("DesignState: dimension must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InvalidInput("DesignState: lambda must be positive and finite");
    V_ = Matrix::Identity(dim, dim) * lambda;
    V_inv_ = Matrix::Identity(dim, dim) / lambda;
  }

  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t count() const noexcept { return count_; }
  const Matrix& V() const noexcept { return V_; }
  const Matrix& V_inv() const noexcept { return V_inv_; }
  /// log det(V_t) - log det(lambda I).
  double log_det_ratio() const noexcept { return log_det_ratio_; }

  void update(const Vector& x) {
    if (x.size() != static_cast<Eigen::Index>(dim_))
      throw InvalidInput("update_design: arm dimension mismatch");
    if (!all_finite(x)) throw InvalidInput("update_design: non-finite arm");

    V_.noalias() += x * x.transpose();
    ++count_;
    ++since_refactor_;

    const Vector w = V_inv_ * x;
    const double denom = 1.0 + x.dot(w);
    log_det_ratio_ += std::log(denom);
    if (since_refactor_ >= kRefactorPeriod) {
      refactor();
    } else {
      V_inv_.noalias() -= (w * w.transpose()) / denom;
      V_inv_ = 0.5 * (V_inv_ + V_inv_.transpose()).eval();
    }
  }

  /// Rebuild V^{-1} (and the log-det) from a fresh factorization of V.
  void refactor() {
    Eigen::LLT<Matrix> llt(V_);
    if (llt.info() != Eigen::Success) throw InternalError("DesignState: V lost positive definiteness");
    V_inv_ = llt.solve(Matrix::Identity(dim_, dim_));
    V_inv_ = 0.5 * (V_inv_ + V_inv_.transpose()).eval();
    const Vector diag = llt.matrixLLT().diagonal();
    log_det_ratio_ = 2.0 * diag.array().log().sum() - static_cast<double>(dim_) * std::log(lambda_);
    since_refactor_ = 0;
  }

 private:
  std::size_t dim_;
  double lambda_;
  Matrix V_;
  Matrix V_inv_;
  double log_det_ratio_ = 0.0;
  std::size_t count_ = 0;
  std::size_t since_refactor_ = 0;
};

/// sqrt(x^T A x); tiny negative quadratic forms from roundoff are clamped to zero.
inline double weighted_norm(const Matrix& A, const Vector& x) {
  const double q = x.dot(A * x);
  if (q >= 0.0) return std::sqrt(q);
  if (q > -tol::kNegativeQuadClamp) return 0.0;
  throw InternalError("weighted_norm: negative quadratic form " + std::to_string(q));
}

/// V^{-1} s, the ridge estimate when s = sum y_tau x_tau.
inline Vector ridge_solve(const DesignState& state, const Vector& s) {
  if (s.size() != static_cast<Eigen::Index>(state.dim())) throw InvalidInput("ridge_solve: dimension mismatch");
  if (!all_finite(s)) throw InvalidInput("ridge_solve: non-finite input");
  return state.V_inv() * s;
}

/// Symmetric V^{-1/2} via eigen-decomposition of V.
inline Matrix inv_sqrt(const DesignState& state) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(state.V());
  if (eig.info() != Eigen::Success) throw InternalError("inv_sqrt: eigen-decomposition failed");
  const Vector& values = eig.eigenvalues();
  if (values.minCoeff() < 0.5 * state.lambda())
    throw InternalError("inv_sqrt: eigenvalue below lambda/2");
  const Matrix& U = eig.eigenvectors();
  Matrix M = U * values.cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
  return 0.5 * (M + M.transpose());
}

/// Rows u_1..u_d of V^{-1/2} X^T, stored as a d x t matrix (row i is u_i).
struct WeightRows {
  Matrix rows;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.rows()); }
  std::size_t length() const noexcept { return static_cast<std::size_t>(rows.cols()); }
};

/// l_p norm of a row or vector, p >= 1.
template <typename Derived>
double lp_norm(const Eigen::MatrixBase<Derived>& v, double p) {
  return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

/// Upper bound on ||u_i||_{1+eps} for a history of length t.
inline double weight_row_lp_bound(std::size_t t, double epsilon) {
  return std::pow(static_cast<double>(t), (1.0 - epsilon) / (2.0 * (1.0 + epsilon)));
}

/// history_arms is d x t with column tau holding x_tau.
inline WeightRows compute_weight_rows(const DesignState& state, const Matrix& history_arms) {
  if (static_cast<std::size_t>(history_arms.cols()) != state.count())
    throw InvalidInput("compute_weight_rows: history length does not match design count");
  if (static_cast<std::size_t>(history_arms.rows()) != state.dim())
    throw InvalidInput("compute_weight_rows: history dimension mismatch");
  WeightRows out;
  out.rows.noalias() = inv_sqrt(state) * history_arms;
  return out;
}

inline WeightRows compute_weight_rows(const DesignState& state, std::span<const Vector> history_arms) {
  Matrix X(static_cast<Eigen::Index>(state.dim()), static_cast<Eigen::Index>(history_arms.size()));
  for (std::size_t i = 0; i < history_arms.size(); ++i) {
    if (history_arms[i].size() != X.rows()) throw InvalidInput("compute_weight_rows: history dimension mismatch");
    X.col(static_cast<Eigen::Index>(i)) = history_arms[i];
  }
  return compute_weight_rows(state, X);
}

}  // namespace linbet
