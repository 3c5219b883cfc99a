#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "safex/errors.hpp"
#include "safex/random.hpp"

namespace safex {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

namespace detail {

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

/// Concatenated parameter matrix [A B], d x (d + d').
class Theta {
 public:
  Theta() = default;

  Theta(const Matrix& A, const Matrix& B) : d_(A.rows()) {
    detail::require(A.rows() == A.cols(), "A must be square, got " + detail::shape(A));
    detail::require(B.rows() == A.rows(),
                    "B must have as many rows as A, got " + detail::shape(B));
    m_.resize(A.rows(), A.cols() + B.cols());
    m_ << A, B;
  }

  static Theta from_matrix(const Matrix& m, Index state_dim) {
    detail::require(m.rows() == state_dim && m.cols() > state_dim,
                    "theta must be d x (d + d'), got " + detail::shape(m));
    return Theta(m.leftCols(state_dim), m.rightCols(m.cols() - state_dim));
  }

  Index state_dim() const { return d_; }
  Index action_dim() const { return m_.cols() - d_; }

  Matrix A() const { return m_.leftCols(d_); }
  Matrix B() const { return m_.rightCols(m_.cols() - d_); }
  RowVector row(Index ell) const { return m_.row(ell); }

  const Matrix& matrix() const { return m_; }
  double norm() const { return m_.norm(); }

 private:
  Index d_ = 0;
  Matrix m_;
};

/// x' = A x + B u + xi, xi ~ N(0, sigma^2 I).
struct LinearGaussianModel {
  Matrix A;
  Matrix B;
  double sigma = 0.0;

  LinearGaussianModel() = default;
  LinearGaussianModel(Matrix a, Matrix b, double s) : A(std::move(a)), B(std::move(b)), sigma(s) {
    validate();
  }
  LinearGaussianModel(const Theta& theta, double s) : A(theta.A()), B(theta.B()), sigma(s) {
    validate();
  }

  Index state_dim() const { return A.rows(); }
  Index action_dim() const { return B.cols(); }
  Theta theta() const { return Theta(A, B); }

  /// Unstable models may be constructed; callers that need rho(A) < 1 check this.
  bool schur_stable() const;

  void validate() const {
    detail::require(A.rows() == A.cols(), "A must be square, got " + detail::shape(A));
    detail::require(B.rows() == A.rows(), "B rows must match A, got " + detail::shape(B));
    detail::require(A.allFinite() && B.allFinite(), "model matrices must be finite");
    detail::require(std::isfinite(sigma) && sigma >= 0.0, "sigma must be finite and >= 0");
  }
};

/// Per-dimension upper bounds x_l <= s_l for l in `constrained`.
struct SafetySpec {
  /// Stand-in bound for unconstrained dimensions; finite so arithmetic stays finite.
  static constexpr double kUnbounded = 1e12;

  Vector s;
  std::vector<Index> constrained;

  SafetySpec() = default;
  SafetySpec(Vector bounds, std::vector<Index> idx) : s(std::move(bounds)), constrained(std::move(idx)) {
    std::sort(constrained.begin(), constrained.end());
    constrained.erase(std::unique(constrained.begin(), constrained.end()), constrained.end());
    validate();
  }

  /// Single constrained dimension `ell` with bound `bound`; everything else unbounded.
  static SafetySpec single(Index d, Index ell, double bound) {
    Vector s = Vector::Constant(d, kUnbounded);
    detail::require(ell >= 0 && ell < d, "constrained index out of range");
    s[ell] = bound;
    return SafetySpec(std::move(s), {ell});
  }

  Index state_dim() const { return s.size(); }

  void validate() const {
    for (Index ell : constrained) {
      detail::require(ell >= 0 && ell < s.size(), "constrained index out of range");
      detail::require(std::isfinite(s[ell]), "bound for a constrained dimension must be finite");
    }
  }

  void check_dim(Index d) const {
    detail::require(s.size() == d, "safety spec has " + std::to_string(s.size()) +
                                       " bounds but the state has dimension " + std::to_string(d));
  }
};

/// B_delta(u) = { z : ||z - u|| <= delta }.
struct ActionBall {
  Vector center;
  double radius = 0.0;

  ActionBall() = default;
  ActionBall(Vector c, double r) : center(std::move(c)), radius(r) {
    detail::require(std::isfinite(r) && r >= 0.0, "ball radius must be finite and >= 0");
    detail::require(center.allFinite(), "ball center must be finite");
  }

  bool contains(const Vector& z, double tol = 1e-12) const {
    return (z - center).norm() <= radius + tol;
  }
};

/// Largest eigenvalue modulus of a square matrix.
inline double spectral_radius(const Matrix& A) {
  detail::require(A.rows() == A.cols(), "spectral_radius needs a square matrix, got " + detail::shape(A));
  detail::require(A.allFinite(), "spectral_radius needs finite entries");
  if (A.size() == 0) return 0.0;
  if (A.rows() == 1) return std::abs(A(0, 0));
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw ValidationError("eigenvalue iteration did not converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_schur_stable(const Matrix& A, double margin = 0.0) {
  return spectral_radius(A) < 1.0 - margin;
}

inline bool LinearGaussianModel::schur_stable() const { return is_schur_stable(A); }

inline double frobenius_distance(const Matrix& lhs, const Matrix& rhs) {
  detail::require(lhs.rows() == rhs.rows() && lhs.cols() == rhs.cols(),
                  "frobenius_distance shape mismatch: " + detail::shape(lhs) + " vs " +
                      detail::shape(rhs));
  return (lhs - rhs).norm();
}

inline double frobenius_distance(const Theta& lhs, const Theta& rhs) {
  return frobenius_distance(lhs.matrix(), rhs.matrix());
}

/// Random A rescaled to spectral radius `rho_target`, B ~ U[-b_range, b_range].
inline LinearGaussianModel random_stable_model(Index d, Index d_prime, double rho_target,
                                               std::uint64_t seed, double sigma = 0.0,
                                               double b_range = 1.0) {
  detail::require(d >= 1 && d_prime >= 1, "dimensions must be positive");
  detail::require(rho_target > 0.0 && rho_target < 1.0, "rho_target must lie in (0, 1)");
  Rng rng(seed);
  Matrix A;
  for (;;) {
    A = rng.normal_matrix(d, d);
    const double rho = spectral_radius(A);
    if (rho > 1e-8) {
      A *= rho_target / rho;
      break;
    }
  }
  Matrix B(d, d_prime);
  for (Index j = 0; j < d_prime; ++j)
    for (Index i = 0; i < d; ++i) B(i, j) = rng.uniform(-b_range, b_range);
  return LinearGaussianModel(std::move(A), std::move(B), sigma);
}

}  // namespace safex
