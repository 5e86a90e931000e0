#pragma once

// Shared test helpers: seeded random matrices/states/channels and the
// independent brute-force oracles the specs are checked against. Oracles
// here must not share code paths with the library routines they verify.

#include "deskq/channel.hpp"
#include "deskq/matrix.hpp"

#include <random>

namespace deskq::test {

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

inline Matrix random_matrix(std::mt19937_64& g, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * Complex(n(g), n(g));
  return m;
}

inline Matrix random_hermitian(std::mt19937_64& g, Index d, double norm_bound = 1.0) {
  Matrix m = random_matrix(g, d, d);
  Matrix h = 0.5 * (m + m.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const double top = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(d - 1)));
  if (top > 0) h *= norm_bound / top;
  return h;
}

inline Matrix random_unitary(std::mt19937_64& g, Index d) {
  Matrix m = random_matrix(g, d, d);
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    Complex diag = r(i, i);
    q.col(i) *= (std::abs(diag) > 1e-14) ? diag / std::abs(diag) : Complex(1, 0);
  }
  return q;
}

inline Vector random_state(std::mt19937_64& g, Index d) {
  Vector v(d);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Index i = 0; i < d; ++i) v(i) = Complex(n(g), n(g));
  v.normalize();
  return v;
}

inline Matrix random_density(std::mt19937_64& g, Index d, Index rank = 0) {
  if (rank <= 0) rank = d;
  Matrix m = random_matrix(g, d, rank);
  Matrix rho = m * m.adjoint();
  rho /= rho.trace().real();
  return rho;
}

inline SuperOp random_channel(std::mt19937_64& g, Index d, int kraus_count = 3) {
  // random Kraus set normalized to trace preservation via the positive square root
  std::vector<Matrix> ks;
  Matrix acc = Matrix::Zero(d, d);
  for (int i = 0; i < kraus_count; ++i) {
    ks.push_back(random_matrix(g, d, d, 0.5));
    acc += ks.back().adjoint() * ks.back();
  }
  HermEig eig = herm_eig(acc);
  Vector inv_sqrt(d);
  for (Index i = 0; i < d; ++i) inv_sqrt(i) = 1.0 / std::sqrt(eig.values(i));
  Matrix s = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.adjoint();
  for (Matrix& k : ks) k = k * s;
  return SuperOp::from_kraus(std::move(ks));
}

// ---- independent oracles -------------------------------------------------

/// Entrywise quadruple-loop Kronecker product.
inline Matrix kron_oracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

/// Explicit index-summation partial trace over the second factor of dA x dB.
inline Matrix partial_trace_second_oracle(const Matrix& m, Index da, Index db) {
  Matrix out = Matrix::Zero(da, da);
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < da; ++j)
      for (Index k = 0; k < db; ++k) out(i, j) += m(i * db + k, j * db + k);
  return out;
}

/// Degree-40 Taylor series for the matrix exponential.
inline Matrix taylor_exp_oracle(const Matrix& a, int terms = 40) {
  Matrix acc = Matrix::Identity(a.rows(), a.cols());
  Matrix pow = Matrix::Identity(a.rows(), a.cols());
  double fact = 1.0;
  for (int n = 1; n <= terms; ++n) {
    pow = (pow * a).eval();
    fact *= n;
    acc += pow / fact;
  }
  return acc;
}

/// Direct T_k recurrence evaluation of a Chebyshev series.
inline double cheb_recurrence_oracle(const Eigen::VectorXd& coeffs, double x) {
  double tkm1 = 1.0, tk = x, acc = coeffs(0) * 1.0;
  if (coeffs.size() > 1) acc += coeffs(1) * x;
  for (Index k = 2; k < coeffs.size(); ++k) {
    const double tkp1 = 2.0 * x * tk - tkm1;
    tkm1 = tk;
    tk = tkp1;
    acc += coeffs(k) * tk;
  }
  return acc;
}

/// 0.5 * sum |eigenvalues| of the (Hermitian) difference.
inline double trace_distance_eig_oracle(const Matrix& rho, const Matrix& sigma) {
  Matrix diff = rho - sigma;
  Matrix herm = 0.5 * (diff + diff.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  double acc = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) acc += std::abs(es.eigenvalues()(i));
  return 0.5 * acc;
}

/// Tr sqrt( sqrt(rho) sigma sqrt(rho) ), the alternate fidelity formula.
inline double fidelity_alt_oracle(const Matrix& rho, const Matrix& sigma) {
  Matrix sr = sqrtm_psd(rho);
  Matrix inner = sr * sigma * sr;
  HermEig eig = herm_eig(hermitian_part(inner));
  double acc = 0.0;
  for (Index i = 0; i < eig.values.size(); ++i) acc += std::sqrt(std::max(0.0, eig.values(i)));
  return acc;
}

}  // namespace deskq::test
