#pragma once

// Hermiticity-preserving superoperators in signed-Kraus form:
//   Phi(X) = sum_k s_k K_k X K_k^+   with s_k in {+1, -1}.
//
// Quantum channels are the all-positive, trace-preserving special case.
// The signed form also covers partial traces, differences of channels and
// block direct sums, which is what the protocol-to-SDP compiler assembles.
// The Choi matrix follows the stacking J = sum_ij |i><j| (x) Phi(|j><i|),
// so Phi(A) = Tr_X( J (A (x) I) ); all modules use this convention.

#include "deskq/matrix.hpp"

#include <utility>

namespace deskq {

class SuperOp {
 public:
  SuperOp() = default;

  /// CP map from a Kraus list.
  static SuperOp from_kraus(std::vector<Matrix> kraus) {
    if (kraus.empty()) throw Error("SuperOp: empty Kraus list");
    SuperOp op;
    op.dim_in_ = kraus.front().cols();
    op.dim_out_ = kraus.front().rows();
    for (const Matrix& k : kraus) {
      if (k.cols() != op.dim_in_ || k.rows() != op.dim_out_)
        throw Error("SuperOp: inconsistent Kraus dimensions");
    }
    op.kraus_ = std::move(kraus);
    op.signs_.assign(op.kraus_.size(), 1.0);
    return op;
  }

  static SuperOp from_signed_kraus(std::vector<Matrix> kraus, std::vector<double> signs) {
    SuperOp op = from_kraus(std::move(kraus));
    if (signs.size() != op.kraus_.size()) throw Error("SuperOp: sign/Kraus count mismatch");
    op.signs_ = std::move(signs);
    return op;
  }

  static SuperOp identity_map(Index d) { return from_kraus({Matrix::Identity(d, d)}); }

  /// Recover a signed-Kraus form from a Choi matrix in the fixed stacking.
  static SuperOp from_choi(const Matrix& j, Index dim_in, Index dim_out) {
    if (j.rows() != dim_in * dim_out || j.cols() != dim_in * dim_out)
      throw Error("SuperOp::from_choi: Choi dimension mismatch");
    // Transpose the input factor to reach the PSD-style stacking, then
    // eigendecompose: Phi(X) = sum_k lam_k W_k X W_k^+.
    Matrix j_std(j.rows(), j.cols());
    for (Index i = 0; i < dim_in; ++i)
      for (Index ip = 0; ip < dim_in; ++ip)
        j_std.block(i * dim_out, ip * dim_out, dim_out, dim_out) =
            j.block(ip * dim_out, i * dim_out, dim_out, dim_out);
    if (!is_hermitian(j_std, 1e-9))
      throw Error("SuperOp::from_choi: map is not Hermiticity-preserving");
    HermEig eig = herm_eig(j_std);
    const double cutoff = 1e-12 * std::max(1.0, std::abs(eig.values(0)));
    std::vector<Matrix> ks;
    std::vector<double> signs;
    for (Index k = 0; k < eig.values.size(); ++k) {
      const double lam = eig.values(k);
      if (std::abs(lam) <= cutoff) continue;
      Matrix w(dim_out, dim_in);
      for (Index i = 0; i < dim_in; ++i) w.col(i) = eig.vectors.col(k).segment(i * dim_out, dim_out);
      ks.push_back(std::sqrt(std::abs(lam)) * w);
      signs.push_back(lam >= 0 ? 1.0 : -1.0);
    }
    if (ks.empty()) {  // the zero map
      ks.push_back(Matrix::Zero(dim_out, dim_in));
      signs.push_back(1.0);
    }
    return from_signed_kraus(std::move(ks), std::move(signs));
  }

  Index dim_in() const { return dim_in_; }
  Index dim_out() const { return dim_out_; }
  const std::vector<Matrix>& kraus() const { return kraus_; }
  const std::vector<double>& signs() const { return signs_; }
  bool completely_positive() const {
    for (double s : signs_)
      if (s < 0) return false;
    return true;
  }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != dim_in_ || x.cols() != dim_in_) throw Error("SuperOp::apply: dim mismatch");
    Matrix out = Matrix::Zero(dim_out_, dim_out_);
    for (std::size_t k = 0; k < kraus_.size(); ++k)
      out += signs_[k] * (kraus_[k] * x * kraus_[k].adjoint());
    return out;
  }

  /// Adjoint map wrt the Hilbert-Schmidt inner product: Phi*(Y) = sum s K^+ Y K.
  Matrix apply_adjoint(const Matrix& y) const {
    if (y.rows() != dim_out_ || y.cols() != dim_out_)
      throw Error("SuperOp::apply_adjoint: dim mismatch");
    Matrix out = Matrix::Zero(dim_in_, dim_in_);
    for (std::size_t k = 0; k < kraus_.size(); ++k)
      out += signs_[k] * (kraus_[k].adjoint() * y * kraus_[k]);
    return out;
  }

  SuperOp adjoint() const {
    std::vector<Matrix> ks;
    ks.reserve(kraus_.size());
    for (const Matrix& k : kraus_) ks.push_back(k.adjoint());
    return from_signed_kraus(std::move(ks), signs_);
  }

  /// J = sum_ij |i><j| (x) Phi(|j><i|).
  Matrix choi() const {
    Matrix j = Matrix::Zero(dim_in_ * dim_out_, dim_in_ * dim_out_);
    for (Index i = 0; i < dim_in_; ++i)
      for (Index jj = 0; jj < dim_in_; ++jj) {
        Matrix e = Matrix::Zero(dim_in_, dim_in_);
        e(jj, i) = 1.0;
        j.block(i * dim_out_, jj * dim_out_, dim_out_, dim_out_) = apply(e);
      }
    return j;
  }

  bool is_trace_preserving(double tol = 1e-10) const {
    Matrix acc = Matrix::Zero(dim_in_, dim_in_);
    for (std::size_t k = 0; k < kraus_.size(); ++k)
      acc += signs_[k] * (kraus_[k].adjoint() * kraus_[k]);
    return max_abs(acc - Matrix::Identity(dim_in_, dim_in_)) <= tol;
  }

  /// this( other( X ) ).
  SuperOp composed_with(const SuperOp& other) const {
    if (other.dim_out_ != dim_in_) throw Error("SuperOp::composed_with: dim mismatch");
    std::vector<Matrix> ks;
    std::vector<double> signs;
    for (std::size_t a = 0; a < kraus_.size(); ++a)
      for (std::size_t b = 0; b < other.kraus_.size(); ++b) {
        ks.push_back(kraus_[a] * other.kraus_[b]);
        signs.push_back(signs_[a] * other.signs_[b]);
      }
    return from_signed_kraus(std::move(ks), std::move(signs));
  }

  /// Rescale by a positive factor.
  SuperOp scaled(double factor) const {
    if (factor <= 0) throw Error("SuperOp::scaled: factor must be positive");
    std::vector<Matrix> ks;
    for (const Matrix& k : kraus_) ks.push_back(std::sqrt(factor) * k);
    return from_signed_kraus(std::move(ks), signs_);
  }

  SuperOp difference_with(const SuperOp& other) const {  // this - other
    if (other.dim_in_ != dim_in_ || other.dim_out_ != dim_out_)
      throw Error("SuperOp::difference_with: dim mismatch");
    std::vector<Matrix> ks = kraus_;
    std::vector<double> signs = signs_;
    for (std::size_t b = 0; b < other.kraus_.size(); ++b) {
      ks.push_back(other.kraus_[b]);
      signs.push_back(-other.signs_[b]);
    }
    return from_signed_kraus(std::move(ks), std::move(signs));
  }

 private:
  Index dim_in_ = 0, dim_out_ = 0;
  std::vector<Matrix> kraus_;
  std::vector<double> signs_;
};

using Channel = SuperOp;

/// Tr over the complement of `keep`, as a CP map (Kraus rows <multi-index|).
inline SuperOp partial_trace_map(const RegisterSplit& split, const std::vector<int>& keep) {
  const Index total = split.total_dim();
  const int n = static_cast<int>(split.size());
  std::vector<char> kept(n, 0);
  for (int k : keep) {
    if (k < 0 || k >= n) throw Error("partial_trace_map: bad subsystem index");
    kept[k] = 1;
  }
  Index keep_dim = 1, trace_dim = 1;
  for (int s = 0; s < n; ++s) (kept[s] ? keep_dim : trace_dim) *= split.dims[s];

  std::vector<Index> stride(n);
  Index acc = 1;
  for (int s = n - 1; s >= 0; --s) {
    stride[s] = acc;
    acc *= split.dims[s];
  }
  std::vector<Matrix> ks;
  for (Index t = 0; t < trace_dim; ++t) {
    Matrix k = Matrix::Zero(keep_dim, total);
    for (Index i = 0; i < keep_dim; ++i) {
      Index kq = i, tq = t, f = 0;
      for (int s = n - 1; s >= 0; --s) {
        Index digit;
        if (kept[s]) {
          digit = kq % split.dims[s];
          kq /= split.dims[s];
        } else {
          digit = tq % split.dims[s];
          tq /= split.dims[s];
        }
        f += digit * stride[s];
      }
      k(i, f) = 1.0;
    }
    ks.push_back(std::move(k));
  }
  return SuperOp::from_kraus(std::move(ks));
}

/// Lift `base` to act in place on a contiguous run of factors of the split,
/// identity elsewhere. The output keeps the surrounding factors where they
/// are, with the target block replaced by base's output space.
inline SuperOp embed_map_on_factors(const SuperOp& base, const RegisterSplit& split,
                                    const std::vector<int>& targets) {
  if (targets.empty()) throw Error("embed_map_on_factors: empty target list");
  const int n = static_cast<int>(split.size());
  Index target_dim = 1;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int t = targets[i];
    if (t < 0 || t >= n) throw Error("embed_map_on_factors: bad target");
    if (i > 0 && t != targets[i - 1] + 1)
      throw Error("embed_map_on_factors: targets must be contiguous ascending");
    target_dim *= split.dims[t];
  }
  if (target_dim != base.dim_in()) throw Error("embed_map_on_factors: base dim mismatch");

  Index before = 1, after = 1;
  for (int s = 0; s < targets.front(); ++s) before *= split.dims[s];
  for (int s = targets.back() + 1; s < n; ++s) after *= split.dims[s];

  const Matrix id_before = Matrix::Identity(before, before);
  const Matrix id_after = Matrix::Identity(after, after);
  std::vector<Matrix> ks;
  for (const Matrix& k : base.kraus()) ks.push_back(kron(id_before, kron(k, id_after)));
  return SuperOp::from_signed_kraus(std::move(ks), base.signs());
}

/// Factor reordering as a unitary superoperator: output factor p is input factor perm[p].
inline SuperOp permute_factors_map(const RegisterSplit& split, const std::vector<int>& perm) {
  const int n = static_cast<int>(split.size());
  if (static_cast<int>(perm.size()) != n) throw Error("permute_factors_map: size mismatch");
  const Index total = split.total_dim();
  std::vector<Index> stride(n);
  Index acc = 1;
  for (int s = n - 1; s >= 0; --s) {
    stride[s] = acc;
    acc *= split.dims[s];
  }
  Matrix p = Matrix::Zero(total, total);
  for (Index idx = 0; idx < total; ++idx) {
    std::vector<Index> digits(n);
    Index q = idx;
    for (int s = n - 1; s >= 0; --s) {
      digits[s] = q % split.dims[s];
      q /= split.dims[s];
    }
    Index out_idx = 0;
    for (int pos = 0; pos < n; ++pos) out_idx = out_idx * split.dims[perm[pos]] + digits[perm[pos]];
    p(out_idx, idx) = 1.0;
  }
  return SuperOp::from_kraus({p});
}

inline SuperOp depolarizing_channel(Index d, double p) {
  // (1-p) X + p Tr(X) I/d
  std::vector<Matrix> ks;
  std::vector<double> signs;
  ks.push_back(std::sqrt(1.0 - p) * Matrix::Identity(d, d));
  signs.push_back(1.0);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(i, j) = std::sqrt(p / static_cast<double>(d));
      ks.push_back(e);
      signs.push_back(1.0);
    }
  return SuperOp::from_signed_kraus(std::move(ks), std::move(signs));
}

}  // namespace deskq
