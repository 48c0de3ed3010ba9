// Symmetric tridiagonal pencils K - x M (M positive definite): eigenvalues by
// Sturm-sequence bisection, vectors by inverse iteration. Also a pivoted
// general tridiagonal solve.
#ifndef ISBPOL_TRIDIAGONAL_HPP
#define ISBPOL_TRIDIAGONAL_HPP

#include <Eigen/Core>

namespace isbpol::tridiagonal {

struct Pencil {
  Eigen::VectorXd k_diag, k_off;  // off-diagonals have one entry fewer
  Eigen::VectorXd m_diag, m_off;

  Eigen::Index size() const { return k_diag.size(); }

  /// Standard problem: M = identity.
  static Pencil standard(const Eigen::VectorXd& diag, const Eigen::VectorXd& off);
};

/// Number of pencil eigenvalues strictly below x.
Eigen::Index count_below(const Pencil& p, double x);

/// k-th smallest eigenvalue (0-based) by bisection to full precision.
double eigenvalue(const Pencil& p, Eigen::Index k);

/// Eigenvector for a converged eigenvalue, normalised to v^T M v = 1.
Eigen::VectorXd eigenvector(const Pencil& p, double lambda);

/// Solves T x = rhs for a general tridiagonal T (sub, diag, super).
Eigen::VectorXd solve(const Eigen::VectorXd& sub, const Eigen::VectorXd& diag, const Eigen::VectorXd& super,
                      const Eigen::VectorXd& rhs);

/// y = M x for a symmetric tridiagonal M.
Eigen::VectorXd multiply(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, const Eigen::VectorXd& x);

}  // namespace isbpol::tridiagonal

#endif  // ISBPOL_TRIDIAGONAL_HPP
