#pragma once

// Dense complex matrix algebra: decompositions, norms, matrix functions,
// partial traces and fidelities. Everything here is a pure function over
// Eigen dense types; these routines double as the brute-force oracles used
// throughout the test suite.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace deskq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermTol = 1e-12;     // relative Hermiticity tolerance
inline constexpr double kUnitaryTol = 1e-10;  // ||U+U - I||_max tolerance
inline constexpr double kRankTol = 1e-12;     // singular values below kRankTol*s_max are zero

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Named subsystem layout: an ambient space factored as dims[0] x dims[1] x ...
struct RegisterSplit {
  std::vector<Index> dims;
  std::vector<std::string> labels;

  RegisterSplit() = default;
  explicit RegisterSplit(std::vector<Index> d, std::vector<std::string> l = {})
      : dims(std::move(d)), labels(std::move(l)) {
    if (!labels.empty() && labels.size() != dims.size())
      throw Error("RegisterSplit: label/dim count mismatch");
    for (Index d_i : dims)
      if (d_i < 1) throw Error("RegisterSplit: nonpositive dimension");
  }

  Index total_dim() const {
    Index p = 1;
    for (Index d : dims) p *= d;
    return p;
  }
  std::size_t size() const { return dims.size(); }
};

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& a, double tol = kHermTol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, max_abs(a));
  return max_abs(a - a.adjoint().eval()) <= tol * scale;
}

inline bool is_unitary(const Matrix& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.cols(), u.cols())) <= tol;
}

inline Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint().eval()); }

inline Vector basis_state(Index dim, Index i) {
  if (i < 0 || i >= dim) throw Error("basis_state: index out of range");
  Vector v = Vector::Zero(dim);
  v(i) = 1.0;
  return v;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Pauli matrices and friends, used all over the tests and the Pauli estimator.
inline Matrix pauli_i() { return Matrix::Identity(2, 2); }
inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}
inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// |Phi> = (1/sqrt(d)) sum_j |j>|j>, the maximally entangled state on C^d (x) C^d.
inline Vector maximally_entangled(Index d) {
  if (d < 1) throw Error("maximally_entangled: d >= 1 required");
  Vector v = Vector::Zero(d * d);
  const double amp = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index j = 0; j < d; ++j) v(j * d + j) = amp;
  return v;
}

/// Partial trace over the complement of `keep` (ascending subsystem indices).
/// The result acts on the kept subsystems in their original order.
inline Matrix partial_trace(const Matrix& a, const RegisterSplit& split,
                            const std::vector<int>& keep) {
  const Index total = split.total_dim();
  if (a.rows() != total || a.cols() != total)
    throw Error("partial_trace: matrix dim does not match split");
  const int n = static_cast<int>(split.size());
  std::vector<char> kept(n, 0);
  for (int k : keep) {
    if (k < 0 || k >= n) throw Error("partial_trace: bad subsystem index");
    kept[k] = 1;
  }
  for (std::size_t i = 1; i < keep.size(); ++i)
    if (keep[i] <= keep[i - 1]) throw Error("partial_trace: keep indices must be ascending");

  Index keep_dim = 1, trace_dim = 1;
  for (int s = 0; s < n; ++s) (kept[s] ? keep_dim : trace_dim) *= split.dims[s];

  // strides of each subsystem in the flat row-major index
  std::vector<Index> stride(n);
  Index acc = 1;
  for (int s = n - 1; s >= 0; --s) {
    stride[s] = acc;
    acc *= split.dims[s];
  }

  auto flat = [&](Index keep_idx, Index trace_idx) {
    Index f = 0;
    // decode keep_idx over kept subsystems, trace_idx over the rest (both row-major)
    Index kq = keep_idx, tq = trace_idx;
    std::vector<Index> digits(n);
    for (int s = n - 1; s >= 0; --s) {
      if (kept[s]) {
        digits[s] = kq % split.dims[s];
        kq /= split.dims[s];
      } else {
        digits[s] = tq % split.dims[s];
        tq /= split.dims[s];
      }
    }
    for (int s = 0; s < n; ++s) f += digits[s] * stride[s];
    return f;
  };

  Matrix out = Matrix::Zero(keep_dim, keep_dim);
  for (Index i = 0; i < keep_dim; ++i)
    for (Index j = 0; j < keep_dim; ++j) {
      Complex sum = 0.0;
      for (Index t = 0; t < trace_dim; ++t) sum += a(flat(i, t), flat(j, t));
      out(i, j) = sum;
    }
  return out;
}

inline Matrix partial_trace(const Matrix& a, Index dim_first, Index dim_second, int keep) {
  return partial_trace(a, RegisterSplit({dim_first, dim_second}), {keep});
}

struct HermEig {
  RealVector values;  // descending
  Matrix vectors;     // columns, phase-normalized
};

namespace detail {

// Deterministic phase gauge: first significant component made positive real.
inline Complex column_phase(const Vector& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8 * scale) {
      return std::conj(v(i)) / std::abs(v(i));
    }
  }
  return Complex(1.0, 0.0);
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending,
/// eigenvector phases normalized for reproducibility.
inline HermEig herm_eig(const Matrix& a) {
  if (!is_hermitian(a)) throw Error("herm_eig: input not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
  if (es.info() != Eigen::Success) throw Error("herm_eig: solver failed");
  const Index n = a.rows();
  HermEig out;
  out.values = RealVector(n);
  out.vectors = Matrix(n, n);
  for (Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);  // ascending -> descending
    Vector col = es.eigenvectors().col(n - 1 - i);
    out.vectors.col(i) = col * detail::column_phase(col);
  }
  return out;
}

struct Svd {
  Matrix u;
  RealVector singular_values;  // descending, nonnegative
  Matrix v;                    // a = u * diag(s) * v.adjoint()
};

inline Svd svd_decomp(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd out;
  out.u = svd.matrixU();
  out.v = svd.matrixV();
  out.singular_values = svd.singularValues();
  // same phase applied to matching u,v columns keeps u s v^+ invariant
  for (Index k = 0; k < out.u.cols(); ++k) {
    const Complex ph = detail::column_phase(out.u.col(k));
    out.u.col(k) *= ph;
    if (k < out.v.cols()) out.v.col(k) *= ph;
  }
  return out;
}

/// f applied to the eigenvalues of a Hermitian matrix: V f(diag) V^+.
inline Matrix matfunc_herm(const Matrix& a, const std::function<double(double)>& f) {
  HermEig eig = herm_eig(a);
  Vector fv(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) fv(i) = f(eig.values(i));
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

/// f applied to singular values: U f(Sigma) V^+, using only the nonzero
/// singular triples. Requires f(0) = 0, otherwise the extension is ill-defined.
inline Matrix matfunc_sv(const Matrix& a, const std::function<double(double)>& f) {
  if (std::abs(f(0.0)) > 1e-12) throw Error("matfunc_sv: f(0) must vanish");
  Svd s = svd_decomp(a);
  const double cutoff = kRankTol * (s.singular_values.size() ? s.singular_values(0) : 0.0);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index k = 0; k < s.singular_values.size(); ++k) {
    const double sv = s.singular_values(k);
    if (sv <= cutoff) continue;
    out += f(sv) * s.u.col(k) * s.v.col(k).adjoint();
  }
  return out;
}

inline double trace_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline double trace_distance(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw Error("trace_distance: dimension mismatch");
  return 0.5 * trace_norm(rho - sigma);
}

/// Square root of a PSD matrix; eigenvalues in [-tol, 0) are clipped to zero.
inline Matrix sqrtm_psd(const Matrix& a, double neg_tol = 1e-9) {
  HermEig eig = herm_eig(a);
  Vector fv(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) {
    double lam = eig.values(i);
    if (lam < -neg_tol) throw Error("sqrtm_psd: negative eigenvalue " + std::to_string(lam));
    fv(i) = std::sqrt(std::max(0.0, lam));
  }
  return eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
}

/// Square-root fidelity F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1.
inline double fidelity(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows()) throw Error("fidelity: dimension mismatch");
  const double tr_r = rho.trace().real(), tr_s = sigma.trace().real();
  if (tr_r > 1.0 + 1e-9 || tr_s > 1.0 + 1e-9) throw Error("fidelity: trace exceeds 1");
  return trace_norm(sqrtm_psd(rho) * sqrtm_psd(sigma));
}

inline Complex hs_inner(const Matrix& a, const Matrix& b) { return (a.adjoint() * b).trace(); }

}  // namespace deskq
