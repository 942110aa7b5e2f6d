#include "lyapobs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lyapobs {

Vector singular_values(const Matrix& m) {
  if (!m.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

double spectral_norm(const Matrix& m) {
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  if (m.rows() == 2 && m.cols() == 2) {
    if (!m.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
    // sigma_1^2 = (|m|_F^2 + sqrt(|m|_F^4 - 4 det^2)) / 2
    const double s = m.cwiseAbs().maxCoeff();
    if (s == 0.0) return 0.0;
    const Eigen::Matrix2d u = m / s;
    const double f = u.squaredNorm();
    const double det = std::abs(u.determinant());
    const double disc = std::max(0.0, (f - 2.0 * det) * (f + 2.0 * det));
    return s * std::sqrt(0.5 * (f + std::sqrt(disc)));
  }
  return singular_values(m)[0];
}

std::vector<std::vector<int>> index_subsets(int d, int k) {
  if (k < 0 || k > d) throw std::invalid_argument("subset size out of range");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == d - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

Matrix compound(const Matrix& m, const std::vector<std::vector<int>>& subsets) {
  const auto n = static_cast<Eigen::Index>(subsets.size());
  const int k = subsets.empty() ? 0 : static_cast<int>(subsets.front().size());
  Matrix out(n, n);
  if (k == 1) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(subsets[i][0], subsets[j][0]);
    return out;
  }
  Matrix block(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& rows = subsets[static_cast<std::size_t>(i)];
      const auto& cols = subsets[static_cast<std::size_t>(j)];
      if (k == 2) {
        out(i, j) = m(rows[0], cols[0]) * m(rows[1], cols[1]) - m(rows[0], cols[1]) * m(rows[1], cols[0]);
        continue;
      }
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) block(a, b) = m(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
      out(i, j) = block.partialPivLu().determinant();
    }
  }
  return out;
}

Matrix compound(const Matrix& m, int k) {
  if (m.rows() != m.cols()) throw std::invalid_argument("compound of a non-square matrix");
  return compound(m, index_subsets(static_cast<int>(m.rows()), k));
}

Matrix orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("frames of different shape");
  const Matrix residual = b - a * (a.transpose() * b);
  return std::min(1.0, spectral_norm(residual));
}

double orthonormality_defect(const Matrix& a) {
  return (a.transpose() * a - Matrix::Identity(a.cols(), a.cols())).cwiseAbs().maxCoeff();
}

Vector canonical_direction(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::invalid_argument("zero direction");
  Vector u = v / n;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] != 0.0) {
      if (u[i] < 0) u = -u;
      break;
    }
  }
  return u;
}

}  // namespace lyapobs
