#pragma once

// Lazy unitary operators. Block-encoding pipelines compose unitaries whose
// ambient dimension grows with every ancilla register; materializing them as
// dense matrices is hopeless, but applying them to state vectors is cheap.
// A UnitaryOp is an immutable expression tree with dense leaves and
// structural nodes (compose, tensor-embed, permute, select, diagonal phases),
// mirroring how gate-level simulators apply circuits to states.

#include "deskq/matrix.hpp"

#include <memory>
#include <optional>
#include <random>
#include <utility>

namespace deskq {

class UnitaryOp {
 public:
  using Ptr = std::shared_ptr<const UnitaryOp>;

  virtual ~UnitaryOp() = default;
  Index dim() const { return dim_; }

  /// out = U * in (or U^+ * in). `out` is resized; `in` and `out` must be distinct.
  virtual void apply_into(const Vector& in, Vector& out, bool adjoint) const = 0;

  Vector apply(const Vector& in, bool adjoint = false) const {
    if (in.size() != dim_) throw Error("UnitaryOp::apply: dimension mismatch");
    Vector out;
    apply_into(in, out, adjoint);
    return out;
  }

 protected:
  explicit UnitaryOp(Index dim) : dim_(dim) {
    if (dim < 1) throw Error("UnitaryOp: nonpositive dimension");
  }

 private:
  Index dim_;
};

namespace ops {

class DenseOp final : public UnitaryOp {
 public:
  explicit DenseOp(Matrix u, bool check = true) : UnitaryOp(u.rows()), u_(std::move(u)) {
    if (u_.rows() != u_.cols()) throw Error("DenseOp: not square");
    if (check && !is_unitary(u_, 1e-9)) throw Error("DenseOp: matrix not unitary");
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    out = adjoint ? (u_.adjoint() * in).eval() : (u_ * in).eval();
  }
  const Matrix& matrix() const { return u_; }

 private:
  Matrix u_;
};

class AdjointOp final : public UnitaryOp {
 public:
  explicit AdjointOp(Ptr inner) : UnitaryOp(inner->dim()), inner_(std::move(inner)) {}
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    inner_->apply_into(in, out, !adjoint);
  }

 private:
  Ptr inner_;
};

/// factors[0] * factors[1] * ... * factors.back(), rightmost applied first.
class ComposeOp final : public UnitaryOp {
 public:
  explicit ComposeOp(std::vector<Ptr> factors)
      : UnitaryOp(factors.empty() ? 1 : factors.front()->dim()), factors_(std::move(factors)) {
    if (factors_.empty()) throw Error("ComposeOp: empty factor list");
    for (const Ptr& f : factors_)
      if (f->dim() != dim()) throw Error("ComposeOp: factor dimension mismatch");
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    Vector cur = in, next;
    const std::size_t n = factors_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Ptr& f = adjoint ? factors_[i] : factors_[n - 1 - i];
      f->apply_into(cur, next, adjoint);
      cur.swap(next);
    }
    out = std::move(cur);
  }

 private:
  std::vector<Ptr> factors_;
};

/// `sub` acting on the listed tensor factors (in that order), identity elsewhere.
class EmbedOp final : public UnitaryOp {
 public:
  EmbedOp(Ptr sub, std::vector<Index> dims, std::vector<int> targets)
      : UnitaryOp(product(dims)), sub_(std::move(sub)), dims_(std::move(dims)),
        targets_(std::move(targets)) {
    const int n = static_cast<int>(dims_.size());
    std::vector<char> seen(n, 0);
    Index tdim = 1;
    for (int t : targets_) {
      if (t < 0 || t >= n || seen[t]) throw Error("EmbedOp: bad target list");
      seen[t] = 1;
      tdim *= dims_[t];
    }
    if (tdim != sub_->dim()) throw Error("EmbedOp: sub dimension mismatch");

    std::vector<Index> stride(n);
    Index acc = 1;
    for (int s = n - 1; s >= 0; --s) {
      stride[s] = acc;
      acc *= dims_[s];
    }
    // offsets of the sub-space points, indexed by the sub's own flat index
    target_offsets_.assign(static_cast<std::size_t>(tdim), 0);
    for (Index u = 0; u < tdim; ++u) {
      Index q = u, off = 0;
      for (int p = static_cast<int>(targets_.size()) - 1; p >= 0; --p) {
        const int t = targets_[p];
        off += (q % dims_[t]) * stride[t];
        q /= dims_[t];
      }
      target_offsets_[static_cast<std::size_t>(u)] = off;
    }
    for (int s = 0; s < n; ++s)
      if (!seen[s]) outer_.push_back(s);
    outer_count_ = 1;
    for (int o : outer_) outer_count_ *= dims_[o];
    outer_strides_.resize(outer_.size());
    for (std::size_t i = 0; i < outer_.size(); ++i) outer_strides_[i] = stride[outer_[i]];
  }

  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    out.resize(dim());
    const Index sd = sub_->dim();
    Vector scratch_in(sd), scratch_out;
    std::vector<Index> digits(outer_.size(), 0);
    for (Index w = 0; w < outer_count_; ++w) {
      Index base = 0;
      for (std::size_t i = 0; i < outer_.size(); ++i) base += digits[i] * outer_strides_[i];
      for (Index u = 0; u < sd; ++u) scratch_in(u) = in(base + target_offsets_[u]);
      sub_->apply_into(scratch_in, scratch_out, adjoint);
      for (Index u = 0; u < sd; ++u) out(base + target_offsets_[u]) = scratch_out(u);
      // advance outer multi-index
      for (int i = static_cast<int>(outer_.size()) - 1; i >= 0; --i) {
        if (++digits[i] < dims_[outer_[i]]) break;
        digits[i] = 0;
      }
    }
  }

 private:
  static Index product(const std::vector<Index>& d) {
    Index p = 1;
    for (Index x : d) p *= x;
    return p;
  }
  Ptr sub_;
  std::vector<Index> dims_;
  std::vector<int> targets_;
  std::vector<Index> target_offsets_;
  std::vector<int> outer_;
  std::vector<Index> outer_strides_;
  Index outer_count_ = 1;
};

/// Tensor-factor reordering: output factor p carries input factor perm[p].
class PermuteOp final : public UnitaryOp {
 public:
  PermuteOp(std::vector<Index> dims, std::vector<int> perm)
      : UnitaryOp(product(dims)), dims_(std::move(dims)), perm_(std::move(perm)) {
    const int n = static_cast<int>(dims_.size());
    if (static_cast<int>(perm_.size()) != n) throw Error("PermuteOp: perm size mismatch");
    std::vector<char> seen(n, 0);
    for (int p : perm_) {
      if (p < 0 || p >= n || seen[p]) throw Error("PermuteOp: invalid permutation");
      seen[p] = 1;
    }
    map_.assign(static_cast<std::size_t>(dim()), 0);
    std::vector<Index> stride(n);
    Index acc = 1;
    for (int s = n - 1; s >= 0; --s) {
      stride[s] = acc;
      acc *= dims_[s];
    }
    for (Index idx = 0; idx < dim(); ++idx) {
      std::vector<Index> digits(n);
      Index q = idx;
      for (int s = n - 1; s >= 0; --s) {
        digits[s] = q % dims_[s];
        q /= dims_[s];
      }
      Index out_idx = 0;
      for (int p = 0; p < n; ++p) out_idx = out_idx * dims_[perm_[p]] + digits[perm_[p]];
      map_[static_cast<std::size_t>(idx)] = out_idx;  // out[map[i]] = in[i]
    }
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    out.resize(dim());
    if (!adjoint)
      for (Index i = 0; i < dim(); ++i) out(map_[static_cast<std::size_t>(i)]) = in(i);
    else
      for (Index i = 0; i < dim(); ++i) out(i) = in(map_[static_cast<std::size_t>(i)]);
  }

 private:
  static Index product(const std::vector<Index>& d) {
    Index p = 1;
    for (Index x : d) p *= x;
    return p;
  }
  std::vector<Index> dims_;
  std::vector<int> perm_;
  std::vector<Index> map_;
};

/// sum_j phase_j |j><j| (x) U_j. The selector register is the last tensor
/// factor by default (the block-encoding ancilla layout); selector_first
/// places it in front instead. A null branch means identity.
class SelectOp final : public UnitaryOp {
 public:
  SelectOp(Index branch_dim, std::vector<Ptr> branches, std::vector<Complex> phases,
           bool selector_first = false)
      : UnitaryOp(branch_dim * static_cast<Index>(branches.size())), branch_dim_(branch_dim),
        branches_(std::move(branches)), phases_(std::move(phases)), selector_first_(selector_first) {
    if (phases_.empty()) phases_.assign(branches_.size(), Complex(1.0, 0.0));
    if (phases_.size() != branches_.size()) throw Error("SelectOp: phase count mismatch");
    for (const Ptr& b : branches_)
      if (b && b->dim() != branch_dim_) throw Error("SelectOp: branch dimension mismatch");
    for (const Complex& p : phases_)
      if (std::abs(std::abs(p) - 1.0) > 1e-12) throw Error("SelectOp: phase not unimodular");
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    out.resize(dim());
    const Index sel = static_cast<Index>(branches_.size());
    Vector slice(branch_dim_), res;
    for (Index j = 0; j < sel; ++j) {
      const Complex ph = adjoint ? std::conj(phases_[j]) : phases_[j];
      auto at = [&](Index b) { return selector_first_ ? j * branch_dim_ + b : b * sel + j; };
      for (Index b = 0; b < branch_dim_; ++b) slice(b) = in(at(b));
      if (branches_[j]) {
        branches_[j]->apply_into(slice, res, adjoint);
        for (Index b = 0; b < branch_dim_; ++b) out(at(b)) = ph * res(b);
      } else {
        for (Index b = 0; b < branch_dim_; ++b) out(at(b)) = ph * slice(b);
      }
    }
  }

 private:
  Index branch_dim_;
  std::vector<Ptr> branches_;
  std::vector<Complex> phases_;
  bool selector_first_;
};

/// Multiplies one basis component by a unimodular phase.
class BasisPhaseOp final : public UnitaryOp {
 public:
  BasisPhaseOp(Index dim, Index index, Complex phase)
      : UnitaryOp(dim), index_(index), phase_(phase) {
    if (index < 0 || index >= dim) throw Error("BasisPhaseOp: index out of range");
    if (std::abs(std::abs(phase) - 1.0) > 1e-12) throw Error("BasisPhaseOp: phase not unimodular");
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    out = in;
    out(index_) *= adjoint ? std::conj(phase_) : phase_;
  }

 private:
  Index index_;
  Complex phase_;
};

/// Phases keyed on the trailing ancilla register being all-zero or not:
/// index = s * anc_dim + a gets phase_zero if a == 0 else phase_rest.
class AncillaPhaseOp final : public UnitaryOp {
 public:
  AncillaPhaseOp(Index sys_dim, Index anc_dim, Complex phase_zero, Complex phase_rest)
      : UnitaryOp(sys_dim * anc_dim), anc_dim_(anc_dim), zero_(phase_zero), rest_(phase_rest) {
    if (std::abs(std::abs(phase_zero) - 1.0) > 1e-12 || std::abs(std::abs(phase_rest) - 1.0) > 1e-12)
      throw Error("AncillaPhaseOp: phase not unimodular");
  }
  void apply_into(const Vector& in, Vector& out, bool adjoint) const override {
    const Complex z = adjoint ? std::conj(zero_) : zero_;
    const Complex r = adjoint ? std::conj(rest_) : rest_;
    out.resize(dim());
    for (Index i = 0; i < dim(); ++i) out(i) = (i % anc_dim_ == 0 ? z : r) * in(i);
  }

 private:
  Index anc_dim_;
  Complex zero_, rest_;
};

}  // namespace ops

inline UnitaryOp::Ptr make_dense(Matrix u, bool check = true) {
  return std::make_shared<ops::DenseOp>(std::move(u), check);
}
inline UnitaryOp::Ptr make_adjoint(UnitaryOp::Ptr inner) {
  return std::make_shared<ops::AdjointOp>(std::move(inner));
}
inline UnitaryOp::Ptr make_compose(std::vector<UnitaryOp::Ptr> factors) {
  if (factors.size() == 1) return factors.front();
  return std::make_shared<ops::ComposeOp>(std::move(factors));
}
inline UnitaryOp::Ptr make_embed(UnitaryOp::Ptr sub, std::vector<Index> dims,
                                 std::vector<int> targets) {
  return std::make_shared<ops::EmbedOp>(std::move(sub), std::move(dims), std::move(targets));
}
inline UnitaryOp::Ptr make_permute(std::vector<Index> dims, std::vector<int> perm) {
  return std::make_shared<ops::PermuteOp>(std::move(dims), std::move(perm));
}
inline UnitaryOp::Ptr make_select(Index branch_dim, std::vector<UnitaryOp::Ptr> branches,
                                  std::vector<Complex> phases = {}, bool selector_first = false) {
  return std::make_shared<ops::SelectOp>(branch_dim, std::move(branches), std::move(phases),
                                         selector_first);
}
inline UnitaryOp::Ptr make_basis_phase(Index dim, Index index, Complex phase) {
  return std::make_shared<ops::BasisPhaseOp>(dim, index, phase);
}
inline UnitaryOp::Ptr make_ancilla_phase(Index sys_dim, Index anc_dim, Complex zero, Complex rest) {
  return std::make_shared<ops::AncillaPhaseOp>(sys_dim, anc_dim, zero, rest);
}
inline UnitaryOp::Ptr make_identity_op(Index dim) {
  return make_dense(Matrix::Identity(dim, dim), false);
}

/// Materialize by applying to every basis vector. Guarded by a size limit.
inline Matrix to_dense(const UnitaryOp& op, Index limit = 4096) {
  if (op.dim() > limit) throw Error("to_dense: dimension exceeds materialization limit");
  Matrix out(op.dim(), op.dim());
  Vector col;
  for (Index j = 0; j < op.dim(); ++j) {
    op.apply_into(basis_state(op.dim(), j), col, false);
    out.col(j) = col;
  }
  return out;
}

/// ||U+U - I||_max, exact for small dims, sampled on random vectors otherwise.
inline double unitarity_residual(const UnitaryOp& op, Index dense_limit = 2048,
                                 int samples = 24, unsigned seed = 12345) {
  if (op.dim() <= dense_limit) {
    Matrix u = to_dense(op, dense_limit);
    return max_abs(u.adjoint() * u - Matrix::Identity(op.dim(), op.dim()));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vector v(op.dim());
    for (Index i = 0; i < op.dim(); ++i) v(i) = Complex(normal(rng), normal(rng));
    v.normalize();
    Vector uv = op.apply(v);
    Vector round_trip = op.apply(uv, /*adjoint=*/true);
    worst = std::max(worst, std::abs(uv.norm() - 1.0));
    worst = std::max(worst, (round_trip - v).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace deskq
