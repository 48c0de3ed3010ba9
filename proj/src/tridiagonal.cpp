#include "isbpol/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace isbpol::tridiagonal {

Pencil Pencil::standard(const Eigen::VectorXd& diag, const Eigen::VectorXd& off) {
  return {diag, off, Eigen::VectorXd::Ones(diag.size()), Eigen::VectorXd::Zero(off.size())};
}

Eigen::Index count_below(const Pencil& p, double x) {
  // Inertia of K - x M from the pivots of its LDL^T factorisation.
  const double tiny = std::numeric_limits<double>::min();
  Eigen::Index count = 0;
  double q = p.k_diag(0) - x * p.m_diag(0);
  if (q < 0.0) ++count;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (std::abs(q) < tiny) q = -tiny;
    const double e = p.k_off(i - 1) - x * p.m_off(i - 1);
    q = p.k_diag(i) - x * p.m_diag(i) - e * e / q;
    if (q < 0.0) ++count;
  }
  return count;
}

double eigenvalue(const Pencil& p, Eigen::Index k) {
  const Eigen::Index n = p.size();
  if (k < 0 || k >= n) throw std::out_of_range("eigenvalue index out of range");
  double lo = -1.0, hi = 1.0;
  while (count_below(p, lo) > k) lo = 2.0 * lo - hi;
  while (count_below(p, hi) <= k) hi = 2.0 * hi - lo;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_below(p, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd solve(const Eigen::VectorXd& sub, const Eigen::VectorXd& diag, const Eigen::VectorXd& super,
                      const Eigen::VectorXd& rhs) {
  // Gaussian elimination with row interchanges; U has two superdiagonals.
  const Eigen::Index n = diag.size();
  Eigen::VectorXd d = diag, du = super, dl = sub, b = rhs;
  Eigen::VectorXd du2 = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 2, 0));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(d(i)) >= std::abs(dl(i))) {
      if (d(i) == 0.0) d(i) = std::numeric_limits<double>::epsilon() * (std::abs(du(i)) + 1.0);
      const double f = dl(i) / d(i);
      d(i + 1) -= f * du(i);
      b(i + 1) -= f * b(i);
      dl(i) = f;
    } else {
      const double f = d(i) / dl(i);
      d(i) = dl(i);
      std::swap(b(i), b(i + 1));
      b(i + 1) -= f * b(i);
      const double tmp = d(i + 1);
      d(i + 1) = du(i) - f * tmp;
      du(i) = tmp;
      if (i + 2 < n) {
        du2(i) = du(i + 1);
        du(i + 1) = -f * du2(i);
      }
      dl(i) = f;
    }
  }
  if (d(n - 1) == 0.0) d(n - 1) = std::numeric_limits<double>::epsilon();
  Eigen::VectorXd x(n);
  for (Eigen::Index i = n; i-- > 0;) {
    double v = b(i);
    if (i + 1 < n) v -= du(i) * x(i + 1);
    if (i + 2 < n) v -= du2(i) * x(i + 2);
    x(i) = v / d(i);
  }
  return x;
}

Eigen::VectorXd multiply(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = diag.cwiseProduct(x);
  const Eigen::Index n = x.size();
  if (n > 1) {
    y.head(n - 1) += off.cwiseProduct(x.tail(n - 1));
    y.tail(n - 1) += off.cwiseProduct(x.head(n - 1));
  }
  return y;
}

Eigen::VectorXd eigenvector(const Pencil& p, double lambda) {
  const Eigen::Index n = p.size();
  // Nudge the shift so K - shift M is not exactly singular.
  const double shift = lambda + 1e-13 * std::max(std::abs(lambda), 1e-3);
  const Eigen::VectorXd d = p.k_diag - shift * p.m_diag;
  const Eigen::VectorXd e = p.k_off - shift * p.m_off;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 1e-3 * std::sin(0.7 * static_cast<double>(i));
  auto m_norm = [&](const Eigen::VectorXd& x) { return std::sqrt(x.dot(multiply(p.m_diag, p.m_off, x))); };
  v /= m_norm(v);
  for (int it = 0; it < 4; ++it) {
    v = solve(e, d, e, multiply(p.m_diag, p.m_off, v));
    v /= m_norm(v);
  }
  return v;
}

}  // namespace isbpol::tridiagonal
