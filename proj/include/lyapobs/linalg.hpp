#pragma once

// Small dense linear algebra helpers shared by the cocycle code.

#include <Eigen/Dense>

#include <vector>

namespace lyapobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Descending singular values.
Vector singular_values(const Matrix& m);
double spectral_norm(const Matrix& m);

// k-subsets of {0..d-1} in lexicographic order.
std::vector<std::vector<int>> index_subsets(int d, int k);

// k-th compound matrix (all k x k minors); its operator norm is
// sigma_1 ... sigma_k of m.
Matrix compound(const Matrix& m, int k);
Matrix compound(const Matrix& m, const std::vector<std::vector<int>>& subsets);

// Thin Q factor of m (columns spanning range(m)), with a deterministic sign
// convention: diag(R) >= 0.
Matrix orthonormalize(const Matrix& m);

// Largest principal-angle sine between the column spans of two orthonormal
// frames of equal rank.
double subspace_distance(const Matrix& a, const Matrix& b);

// max |a^T a - I|.
double orthonormality_defect(const Matrix& a);

// Unit vector along v, sign fixed so the first nonzero entry is positive.
Vector canonical_direction(const Vector& v);

}  // namespace lyapobs
