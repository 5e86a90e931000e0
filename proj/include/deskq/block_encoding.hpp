#pragma once

// The block-encoding calculus. A BlockEncoding is a unitary U on
// sys (x) ancilla together with (alpha, eps, a) bookkeeping such that
//   || A  -  alpha (I (x) <0^a|) U (I (x) |0^a>) ||_inf  <=  eps
// for the intended target A. Combinators certify their output budgets from
// the input budgets; extract_block is the universal test oracle.
//
// Polynomial transforms come with two interchangeable backends:
//   - walk: the qubitization alternation U (R U^+ R U)^..., R = 2 Pi - I,
//     which queries the input unitary k times;
//   - dilation: classically evaluates the polynomial on the encoded block
//     and re-embeds the contraction as a fresh two-block unitary.
// Both satisfy the same extract-level contract; the dilation keeps pipelines
// desk-sized, the walk is exercised by tests at moderate degree.

#include "deskq/channel.hpp"
#include "deskq/cheb.hpp"
#include "deskq/matrix.hpp"
#include "deskq/unitary_op.hpp"

#include <cmath>
#include <optional>

namespace deskq {

inline constexpr double kFloatSlack = 1e-12;

struct BlockEncoding {
  UnitaryOp::Ptr unitary;
  double alpha = 1.0;   // post-selection factor
  double eps = 0.0;     // certified error budget
  int ancillas = 0;     // ancilla qubit count
  Index sys_dim = 1;
  std::optional<Matrix> target;  // claimed block, kept when known (testing aid)

  Index anc_dim() const { return Index(1) << ancillas; }
  Index total_dim() const { return sys_dim * anc_dim(); }
};

inline void validate_encoding(const BlockEncoding& be) {
  if (!be.unitary) throw Error("BlockEncoding: missing unitary");
  if (be.unitary->dim() != be.total_dim())
    throw Error("BlockEncoding: unitary dimension != sys_dim * 2^ancillas");
  if (be.alpha < 1.0 - 1e-12) throw Error("BlockEncoding: alpha must be >= 1");
  if (be.eps < 0.0) throw Error("BlockEncoding: negative eps");
}

/// alpha * (I (x) <0^a|) U (I (x) |0^a>): apply U to the D columns |j>|0^a>.
inline Matrix extract_block(const BlockEncoding& be) {
  validate_encoding(be);
  const Index d = be.sys_dim, ad = be.anc_dim();
  Matrix out(d, d);
  Vector col;
  for (Index j = 0; j < d; ++j) {
    be.unitary->apply_into(basis_state(be.total_dim(), j * ad), col, false);
    for (Index i = 0; i < d; ++i) out(i, j) = col(i * ad);
  }
  return be.alpha * out;
}

/// Measured defect || target - extract ||_inf when a claimed target is attached.
inline double self_check_residual(const BlockEncoding& be) {
  if (!be.target) throw Error("self_check_residual: no claimed target attached");
  return spectral_norm(*be.target - extract_block(be));
}

inline int log2_exact(Index d) {
  int n = 0;
  while ((Index(1) << n) < d) ++n;
  if ((Index(1) << n) != d) throw Error("dimension must be a power of two");
  return n;
}

/// Wraps a plain unitary as a (1, 0, 0)-encoding of itself.
inline BlockEncoding trivial_encoding(const Matrix& u) {
  if (!is_unitary(u, 1e-9)) throw Error("trivial_encoding: matrix not unitary");
  BlockEncoding be;
  be.unitary = make_dense(u, false);
  be.sys_dim = u.rows();
  be.target = u;
  return be;
}

inline BlockEncoding identity_encoding(Index d) { return trivial_encoding(Matrix::Identity(d, d)); }

namespace detail {

/// Deterministic unitary with a prescribed (unit) first column, via a
/// Householder reflection with phase fix.
inline Matrix unitary_with_first_column(const Vector& x) {
  const Index d = x.size();
  if (std::abs(x.norm() - 1.0) > 1e-9) throw Error("unitary_with_first_column: column not unit");
  Complex phase(1.0, 0.0);
  if (std::abs(x(0)) > 1e-14) phase = x(0) / std::abs(x(0));
  Vector y = std::conj(phase) * x;  // y(0) real, >= 0
  Vector w = y - basis_state(d, 0);
  const double wn2 = w.squaredNorm();
  Matrix h = Matrix::Identity(d, d);
  if (wn2 > 1e-28) h -= (2.0 / wn2) * (w * w.adjoint());
  return phase * h;  // maps e_0 to x
}

inline Matrix hadamard_power(int qubits) {
  Matrix h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  Matrix out = Matrix::Identity(1, 1);
  for (int i = 0; i < qubits; ++i) out = kron(out, h);
  return out;
}

/// Rotation mapping |0> to a|0> + sqrt(1-|a|^2)|1>, |a| <= 1.
inline Matrix amplitude_rotation(Complex a) {
  const double r = std::sqrt(std::max(0.0, 1.0 - std::norm(a)));
  Matrix m(2, 2);
  m << a, -r, r, std::conj(a);
  return m;
}

/// Binary-tree rotation cascade preparing sum_j sqrt(p_j) |j> from |0...0>.
/// p must be nonnegative and sum to 1 over a power-of-two length.
inline Matrix prep_cascade(const RealVector& p) {
  const Index m = p.size();
  const int qubits = log2_exact(m);
  Matrix u = Matrix::Identity(m, m);
  for (int level = 0; level < qubits; ++level) {
    const Index prefixes = Index(1) << level;
    const Index block = m / prefixes;        // size of subtree at this level
    Matrix stage = Matrix::Zero(m, m);
    for (Index pre = 0; pre < prefixes; ++pre) {
      const Index lo = pre * block;
      double w0 = 0, w1 = 0;
      for (Index i = lo; i < lo + block / 2; ++i) w0 += p(i);
      for (Index i = lo + block / 2; i < lo + block; ++i) w1 += p(i);
      const double w = w0 + w1;
      double c = 1.0, s = 0.0;
      if (w > 1e-300) {
        c = std::sqrt(w0 / w);
        s = std::sqrt(w1 / w);
      }
      Matrix rot(2, 2);
      rot << c, -s, s, c;
      stage.block(lo, lo, block, block) = kron(rot, Matrix::Identity(block / 2, block / 2));
    }
    u = stage * u;
  }
  return u;
}

}  // namespace detail

/// Unitary completion of a contraction: [[W, -B],[B', W']] with exact corner W.
/// Layout is system-major with one trailing ancilla qubit.
inline Matrix dilate_contraction(const Matrix& w) {
  if (w.rows() != w.cols()) throw Error("dilate_contraction: not square");
  const Index d = w.rows();
  Svd s = svd_decomp(w);
  if (s.singular_values.size() && s.singular_values(0) > 1.0 + 1e-9)
    throw Error("dilate_contraction: spectral norm exceeds 1");
  RealVector comp(d);
  for (Index i = 0; i < d; ++i)
    comp(i) = std::sqrt(std::max(0.0, 1.0 - std::min(1.0, s.singular_values(i)) *
                                            std::min(1.0, s.singular_values(i))));
  const Matrix b_tl = s.u * comp.asDiagonal() * s.u.adjoint();   // sqrt(I - WW+)
  const Matrix b_br = s.v * comp.asDiagonal() * s.v.adjoint();   // sqrt(I - W+W)
  Matrix out(2 * d, 2 * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      out(2 * i, 2 * j) = w(i, j);              // (anc 0 <- anc 0)
      out(2 * i, 2 * j + 1) = -b_tl(i, j);      // (anc 0 <- anc 1)
      out(2 * i + 1, 2 * j) = b_br(i, j);       // (anc 1 <- anc 0)
      out(2 * i + 1, 2 * j + 1) = w.adjoint()(i, j);
    }
  return out;
}

/// One-ancilla-qubit encoding with corner target/alpha (requires ||target|| <= alpha).
inline BlockEncoding dilation_encoding(const Matrix& target, double alpha, double eps) {
  if (alpha < 1.0 - 1e-12) throw Error("dilation_encoding: alpha must be >= 1");
  Matrix w = target / alpha;
  const double norm = spectral_norm(w);
  if (norm > 1.0 + 1e-9) throw Error("dilation_encoding: target norm exceeds alpha");
  if (norm > 1.0) w /= norm;  // clip float overshoot
  BlockEncoding be;
  be.unitary = make_dense(dilate_contraction(w), false);
  be.alpha = alpha;
  be.eps = eps + kFloatSlack;
  be.ancillas = 1;
  be.sys_dim = target.rows();
  be.target = target;
  return be;
}

/// Appendix-style embedding of an almost-unitary matrix (all singular values
/// in [1-delta, 1]) into a unitary [[A, -B],[B, A]] written in block (qubit-major)
/// layout. The deviation ||(|0>A|phi>) - A_0|0>|phi>|| is O(sqrt(delta)).
inline Matrix embed_almost_unitary(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("embed_almost_unitary: not square");
  const Index d = a.rows();
  Svd s = svd_decomp(a);
  if (s.singular_values.size() == 0) throw Error("embed_almost_unitary: empty input");
  if (s.singular_values(0) > 1.0 + 1e-9)
    throw Error("embed_almost_unitary: singular value above 1");
  RealVector comp(d);
  for (Index i = 0; i < d; ++i)
    comp(i) = std::sqrt(std::max(0.0, 1.0 - std::min(1.0, s.singular_values(i)) *
                                            std::min(1.0, s.singular_values(i))));
  const Matrix b = s.u * comp.asDiagonal() * s.v.adjoint();
  Matrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = a;
  out.topRightCorner(d, d) = -b;
  out.bottomLeftCorner(d, d) = b;
  out.bottomRightCorner(d, d) = a;
  return out;
}

/// (D, ~0, 1 + log D)-encoding of a matrix with entries of magnitude <= 1:
/// prepare a uniform row register, swap it with the input, rotate one flag
/// qubit by the addressed entry, and Hadamard the column register.
inline BlockEncoding from_entries(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("from_entries: not square");
  const Index d = a.rows();
  const int n = log2_exact(d);
  if (max_abs(a) > 1.0 + 1e-12) throw Error("from_entries: entry magnitude exceeds 1");

  const Matrix had = detail::hadamard_power(n);
  std::vector<UnitaryOp::Ptr> rotations;
  rotations.reserve(static_cast<std::size_t>(d) * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      Complex entry = a(i, j);
      if (std::abs(entry) > 1.0) entry /= std::abs(entry);
      rotations.push_back(make_dense(detail::amplitude_rotation(entry), false));
    }
  const std::vector<Index> dims{d, d, 2};
  UnitaryOp::Ptr prep = make_embed(make_dense(had, false), dims, {1});
  UnitaryOp::Ptr swap12 = make_permute(dims, {1, 0, 2});
  UnitaryOp::Ptr rot_bank = make_select(2, std::move(rotations), {}, /*selector_first=*/true);
  UnitaryOp::Ptr had2 = make_embed(make_dense(had, false), dims, {1});

  BlockEncoding be;
  be.unitary = make_compose({had2, rot_bank, swap12, prep});
  be.alpha = static_cast<double>(d);
  be.eps = kFloatSlack * static_cast<double>(d);
  be.ancillas = n + 1;
  be.sys_dim = d;
  be.target = a;
  return be;
}

/// (1, 0, log(Dx*Dy))-encoding of Tr_Y(|psi><psi|) for |psi> = prep|0...0>
/// bipartite on X (x) Y: conjugate a swap of X with the prepared copy.
inline BlockEncoding from_state_prep(UnitaryOp::Ptr prep, Index dim_x, Index dim_y) {
  if (prep->dim() != dim_x * dim_y) throw Error("from_state_prep: prep dimension mismatch");
  const std::vector<Index> dims{dim_x, dim_x, dim_y};
  Matrix swap_x(dim_x * dim_x, dim_x * dim_x);
  swap_x.setZero();
  for (Index i = 0; i < dim_x; ++i)
    for (Index j = 0; j < dim_x; ++j) swap_x(j * dim_x + i, i * dim_x + j) = 1.0;

  UnitaryOp::Ptr prep_on = make_embed(prep, dims, {1, 2});
  UnitaryOp::Ptr swap_on = make_embed(make_dense(swap_x, false), dims, {0, 1});
  BlockEncoding be;
  be.unitary = make_compose({make_adjoint(prep_on), swap_on, prep_on});
  be.alpha = 1.0;
  be.eps = kFloatSlack;
  be.ancillas = log2_exact(dim_x * dim_y);
  be.sys_dim = dim_x;
  return be;
}

inline BlockEncoding from_state_prep(const Matrix& prep, Index dim_x, Index dim_y) {
  if (prep.rows() != dim_x * dim_y || prep.cols() != prep.rows())
    throw Error("from_state_prep: prep dimension mismatch");
  if (!is_unitary(prep, 1e-9)) throw Error("from_state_prep: prep not unitary");
  return from_state_prep(make_dense(prep, false), dim_x, dim_y);
}

/// Product A.B: (alpha_a alpha_b, alpha_b eps_a + alpha_a eps_b, a+b).
inline BlockEncoding be_product(const BlockEncoding& a, const BlockEncoding& b) {
  validate_encoding(a);
  validate_encoding(b);
  if (a.sys_dim != b.sys_dim) throw Error("be_product: system dimension mismatch");
  const std::vector<Index> dims{a.sys_dim, a.anc_dim(), b.anc_dim()};
  UnitaryOp::Ptr ua = make_embed(a.unitary, dims, {0, 1});
  UnitaryOp::Ptr ub = make_embed(b.unitary, dims, {0, 2});
  BlockEncoding out;
  out.unitary = make_compose({ua, ub});
  out.alpha = a.alpha * b.alpha;
  out.eps = b.alpha * a.eps + a.alpha * b.eps + a.eps * b.eps;
  out.ancillas = a.ancillas + b.ancillas;
  out.sys_dim = a.sys_dim;
  if (a.target && b.target) out.target = (*a.target) * (*b.target);
  return out;
}

namespace detail {

inline BlockEncoding pad_ancillas(const BlockEncoding& be, int ancillas) {
  if (ancillas < be.ancillas) throw Error("pad_ancillas: cannot shrink");
  if (ancillas == be.ancillas) return be;
  BlockEncoding out = be;
  out.ancillas = ancillas;
  out.unitary = make_embed(be.unitary, {be.total_dim(), Index(1) << (ancillas - be.ancillas)}, {0});
  return out;
}

}  // namespace detail

/// Linear combination sum_i y_i A_i via prepare-select-unprepare.
/// alpha = ||ytilde||_1 with ytilde_i = y_i alpha_i; signs/phases of the
/// weights are absorbed into the select unitary.
inline BlockEncoding be_lincomb(const std::vector<Complex>& weights,
                                const std::vector<BlockEncoding>& bes) {
  if (bes.empty()) throw Error("be_lincomb: empty encoding list");
  if (weights.size() != bes.size()) throw Error("be_lincomb: weight count mismatch");
  const Index d = bes.front().sys_dim;
  int a_max = 0;
  for (const BlockEncoding& be : bes) {
    validate_encoding(be);
    if (be.sys_dim != d) throw Error("be_lincomb: system dimension mismatch");
    a_max = std::max(a_max, be.ancillas);
  }
  double l1 = 0.0, eps = 0.0;
  for (std::size_t i = 0; i < bes.size(); ++i) {
    l1 += std::abs(weights[i]) * bes[i].alpha;
    eps += std::abs(weights[i]) * bes[i].eps;
  }
  if (l1 <= 0.0) throw Error("be_lincomb: all weights vanish");

  const bool needs_filler = l1 < 1.0 - 1e-12;  // keep alpha >= 1 with a dead branch
  if (needs_filler && a_max == 0) a_max = 1;

  const std::size_t m = bes.size() + (needs_filler ? 1 : 0);
  Index sel = 1;
  int ctrl_qubits = 0;
  while (sel < static_cast<Index>(m)) {
    sel <<= 1;
    ++ctrl_qubits;
  }

  const double alpha_out = std::max(l1, 1.0);
  const Index branch_dim = d * (Index(1) << a_max);
  std::vector<UnitaryOp::Ptr> branches(static_cast<std::size_t>(sel), nullptr);
  std::vector<Complex> phases(static_cast<std::size_t>(sel), Complex(1.0, 0.0));
  RealVector p = RealVector::Zero(sel);
  for (std::size_t i = 0; i < bes.size(); ++i) {
    const BlockEncoding padded = detail::pad_ancillas(bes[i], a_max);
    branches[i] = padded.unitary;
    const Complex ytilde = weights[i] * bes[i].alpha;
    p(static_cast<Index>(i)) = std::abs(ytilde) / alpha_out;
    if (std::abs(ytilde) > 0) phases[i] = ytilde / std::abs(ytilde);
  }
  if (needs_filler) {
    // dead slot: weight tops the distribution up to 1; its branch flips an
    // ancilla qubit so the slot contributes nothing to the encoded corner
    Matrix flip = kron(Matrix::Identity(branch_dim / 2, branch_dim / 2), pauli_x());
    branches[bes.size()] = make_dense(flip, false);
    p(static_cast<Index>(bes.size())) = 1.0 - l1 / alpha_out;
  }

  const Matrix prep = detail::prep_cascade(p);
  const std::vector<Index> dims{branch_dim, sel};
  UnitaryOp::Ptr prep_on = make_embed(make_dense(prep, false), dims, {1});
  UnitaryOp::Ptr select = make_select(branch_dim, std::move(branches), std::move(phases));

  BlockEncoding out;
  out.unitary = make_compose({make_adjoint(prep_on), select, prep_on});
  out.alpha = alpha_out;
  out.eps = eps + kFloatSlack * alpha_out;
  out.ancillas = a_max + ctrl_qubits;
  out.sys_dim = d;
  bool have_targets = true;
  for (const BlockEncoding& be : bes) have_targets = have_targets && be.target.has_value();
  if (have_targets) {
    Matrix t = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < bes.size(); ++i) t += weights[i] * (*bes[i].target);
    out.target = t;
  }
  return out;
}

/// Tr over one factor of sys = X (x) Y: conjugate by |0> <-> |i> permutations on
/// the traced factor and combine with unit weights. alpha scales by the traced
/// dimension; keep = 1 keeps the second factor (the traced one moves to front first).
inline BlockEncoding be_partial_trace(const BlockEncoding& be, Index dim_x, Index dim_y,
                                      int keep) {
  validate_encoding(be);
  if (dim_x * dim_y != be.sys_dim) throw Error("be_partial_trace: split mismatch");
  if (keep != 0 && keep != 1) throw Error("be_partial_trace: keep must be 0 or 1");

  UnitaryOp::Ptr u = be.unitary;
  Index kept = dim_x, traced = dim_y;
  if (keep == 1) {  // move the kept factor in front
    UnitaryOp::Ptr perm = make_permute({dim_x, dim_y, be.anc_dim()}, {1, 0, 2});
    u = make_compose({perm, u, make_adjoint(perm)});
    kept = dim_y;
    traced = dim_x;
  }
  if (traced == 1) {
    BlockEncoding out = be;
    out.unitary = u;
    out.sys_dim = kept;
    out.target.reset();
    return out;
  }

  const std::vector<Index> dims{kept, traced, be.anc_dim()};
  std::vector<BlockEncoding> terms;
  terms.reserve(static_cast<std::size_t>(traced));
  for (Index i = 0; i < traced; ++i) {
    Matrix j_i = Matrix::Identity(traced, traced);
    if (i != 0) {
      j_i(0, 0) = 0;
      j_i(i, i) = 0;
      j_i(0, i) = 1;
      j_i(i, 0) = 1;
    }
    UnitaryOp::Ptr lift = make_embed(make_dense(j_i, false), dims, {1});
    BlockEncoding term;
    term.unitary = make_compose({make_adjoint(lift), u, lift});
    term.alpha = be.alpha;
    term.eps = be.eps;
    term.ancillas = be.ancillas + log2_exact(traced);
    term.sys_dim = kept;
    terms.push_back(std::move(term));
  }
  return be_lincomb(std::vector<Complex>(terms.size(), Complex(1.0, 0.0)), terms);
}

inline constexpr double kChoiEntryCap = 1e6;

/// Phi(A) = Tr_X( J (A (x) I) ) assembled from an entry encoding of the Choi
/// matrix (rescaled so entries fit in [-1,1]), a product with A (x) I, and a
/// partial trace over the input copy.
inline BlockEncoding be_apply_superop(const BlockEncoding& be, const SuperOp& ch) {
  validate_encoding(be);
  const Index d = be.sys_dim;
  if (ch.dim_in() != d || ch.dim_out() != d)
    throw Error("be_apply_superop: channel dims must match sys_dim");
  Matrix j = ch.choi();
  double scale = std::max(1.0, max_abs(j));
  if (scale > kChoiEntryCap) throw Error("be_apply_superop: Choi entries exceed normalization cap");
  BlockEncoding be_j = from_entries(j / scale);
  be_j.alpha *= scale;  // same unitary, rescaled claim
  be_j.eps *= scale;
  be_j.target = j;

  BlockEncoding be_ai;  // A (x) I on X (x) Y
  be_ai.unitary = make_embed(be.unitary, {d, d, be.anc_dim()}, {0, 2});
  be_ai.alpha = be.alpha;
  be_ai.eps = be.eps;
  be_ai.ancillas = be.ancillas;
  be_ai.sys_dim = d * d;
  if (be.target) be_ai.target = kron(*be.target, Matrix::Identity(d, d));

  BlockEncoding prod = be_product(be_j, be_ai);
  BlockEncoding out = be_partial_trace(prod, d, d, /*keep=*/1);
  if (be.target) out.target = ch.apply(*be.target);
  return out;
}

/// (alpha, eps, a + 2 log D)-encoding of (A (x) I)|Phi><0...0|.
inline BlockEncoding be_purify(const BlockEncoding& be) {
  validate_encoding(be);
  const Index d = be.sys_dim;
  const Index d2 = d * d;
  const Matrix prep_phi = detail::unitary_with_first_column(maximally_entangled(d));

  const std::vector<Index> dims{d2, d2};
  UnitaryOp::Ptr w =
      make_compose({make_permute(dims, {1, 0}), make_embed(make_dense(prep_phi, false), dims, {1})});
  BlockEncoding be_w;
  be_w.unitary = w;
  be_w.alpha = 1.0;
  be_w.eps = kFloatSlack;
  be_w.ancillas = log2_exact(d2);
  be_w.sys_dim = d2;

  BlockEncoding be_ai;
  be_ai.unitary = make_embed(be.unitary, {d, d, be.anc_dim()}, {0, 2});
  be_ai.alpha = be.alpha;
  be_ai.eps = be.eps;
  be_ai.ancillas = be.ancillas;
  be_ai.sys_dim = d2;

  BlockEncoding out = be_product(be_ai, be_w);
  if (be.target)
    out.target = kron(*be.target, Matrix::Identity(d, d)) *
                 (maximally_entangled(d) * basis_state(d2, 0).adjoint());
  return out;
}

enum class PolyBackend { kDilation, kWalk };

namespace detail {

inline Matrix encoded_hermitian_block(const BlockEncoding& be) {
  Matrix block = extract_block(be) / be.alpha;
  const double asym = max_abs(block - block.adjoint().eval());
  if (asym > 2.0 * (be.eps / std::max(be.alpha, 1.0)) + 1e-7)
    throw Error("encoded block is not Hermitian within tolerance");
  return hermitian_part(block);
}

inline RealVector clipped_eigs(const RealVector& v) {
  RealVector out = v;
  for (Index i = 0; i < out.size(); ++i) out(i) = std::clamp(out(i), -1.0, 1.0);
  return out;
}

}  // namespace detail

/// Re-encode the current block as a fresh one-qubit dilation with the spectral
/// norm as post-selection factor. The certified distance to the ideal target
/// is unchanged; the ancilla ledger and alpha reset to the compact values.
inline BlockEncoding compact_encoding(const BlockEncoding& be) {
  Matrix block = extract_block(be);
  const double alpha = std::max(1.0, spectral_norm(block));
  BlockEncoding out = dilation_encoding(block, alpha, be.eps);
  if (be.target) out.target = be.target;
  return out;
}

/// (1, 4k sqrt(eps/alpha), a+1)-encoding of T_k(A/alpha) for a Hermitian block.
/// The dilation backend evaluates T_k on the actual block, so its certificate
/// may use the Lipschitz bound k^2 * eps/alpha when that is tighter than the
/// generic query-robustness bound.
inline BlockEncoding cheb_of_be(const BlockEncoding& be, int k,
                                PolyBackend backend = PolyBackend::kDilation) {
  validate_encoding(be);
  if (k < 0) throw Error("cheb_of_be: negative degree");
  const double eps_out =
      4.0 * static_cast<double>(k) * std::sqrt(be.eps / be.alpha) + kFloatSlack;

  if (backend == PolyBackend::kWalk) {
    if (k == 0) return detail::pad_ancillas(identity_encoding(be.sys_dim), be.ancillas + 1);
    // reflection about the ancilla-zero subspace
    UnitaryOp::Ptr r = make_ancilla_phase(be.sys_dim, be.anc_dim(), 1.0, -1.0);
    std::vector<UnitaryOp::Ptr> chain;
    if (k % 2 == 1) chain.push_back(be.unitary);
    for (int rep = 0; rep < k / 2; ++rep) {
      chain.push_back(r);
      chain.push_back(make_adjoint(be.unitary));
      chain.push_back(r);
      chain.push_back(be.unitary);
    }
    BlockEncoding out;
    out.unitary = make_compose(std::move(chain));
    out.alpha = 1.0;
    out.eps = eps_out;
    out.ancillas = be.ancillas;
    out.sys_dim = be.sys_dim;
    detail::encoded_hermitian_block(be);  // Hermiticity precondition
    return detail::pad_ancillas(out, be.ancillas + 1);
  }

  const Matrix block = detail::encoded_hermitian_block(be);
  HermEig eig = herm_eig(block);
  RealVector lam = detail::clipped_eigs(eig.values);
  Vector fv(lam.size());
  for (Index i = 0; i < lam.size(); ++i) fv(i) = std::cos(k * std::acos(lam(i)));
  Matrix tk = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
  const double lipschitz = static_cast<double>(k) * k * be.eps / be.alpha + kFloatSlack;
  return dilation_encoding(tk, 1.0, std::min(eps_out, lipschitz));
}

/// (||c||_1, ||c||_1 * 4d sqrt(eps/alpha) + float, .)-encoding of P(A/alpha)
/// for P given in the Chebyshev basis.
inline BlockEncoding poly_of_be(const BlockEncoding& be, const ChebSeries& series,
                                PolyBackend backend = PolyBackend::kDilation) {
  validate_encoding(be);
  if (series.coeffs.size() == 0) throw Error("poly_of_be: empty series");
  const int d = series.degree();
  double weighted_slack = 0.0;  // sum_k |c_k| 4k sqrt(eps/alpha)
  for (int k = 0; k <= d; ++k)
    weighted_slack += std::abs(series.coeffs(k)) * 4.0 * k;
  weighted_slack *= std::sqrt(be.eps / be.alpha);

  if (backend == PolyBackend::kWalk) {
    std::vector<BlockEncoding> terms;
    std::vector<Complex> weights;
    for (int k = 0; k <= d; ++k) {
      if (series.coeffs(k) == 0.0 && k != 0) continue;
      terms.push_back(cheb_of_be(be, k, PolyBackend::kWalk));
      weights.push_back(series.coeffs(k));
    }
    BlockEncoding out = be_lincomb(weights, terms);
    out.eps += weighted_slack;
    return out;
  }

  const Matrix block = detail::encoded_hermitian_block(be);
  HermEig eig = herm_eig(block);
  RealVector lam = detail::clipped_eigs(eig.values);
  Vector fv(lam.size());
  for (Index i = 0; i < lam.size(); ++i) fv(i) = cheb_eval(series, lam(i));
  Matrix p = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
  const double alpha_out = std::max(1.0, series.l1());
  double lipschitz = 0.0;  // max |P'| <= sum |c_k| k^2 on [-1,1]
  for (int k = 0; k <= d; ++k) lipschitz += std::abs(series.coeffs(k)) * k * k;
  lipschitz = lipschitz * be.eps / be.alpha + kFloatSlack;
  return dilation_encoding(p, alpha_out, std::min(weighted_slack + kFloatSlack, lipschitz));
}

struct FixedPointResult {
  BlockEncoding encoding;
  double eta = 0.0;           // 1 - initial success probability
  double success_prob = 0.0;  // 1 - eta^{3^m}, measured
  int levels = 0;
};

inline constexpr int kAmplifyLevelCap = 7;

/// pi/3 fixed-point amplification of an encoding of |psi><0...0|. The
/// recursion U_m = U_{m-1} R_s U_{m-1}^+ R_t U_{m-1} drives the success
/// probability to exactly 1 - eta^{3^m}.
inline FixedPointResult fixed_point_amplify(const BlockEncoding& be, int m) {
  validate_encoding(be);
  if (m < 0 || m > kAmplifyLevelCap) throw Error("fixed_point_amplify: level out of range");

  // the block must be rank one against <0...0|
  Matrix block = extract_block(be);
  Matrix rank1 = block.col(0) * basis_state(be.sys_dim, 0).adjoint();
  if (spectral_norm(block - rank1) > be.alpha * (be.eps + 1e-6) + 1e-6)
    throw Error("fixed_point_amplify: block is not of the form |psi><0...0|");

  const Index total = be.total_dim();
  // R = I - e^{-i pi/3} P: subtract ph = e^{-i pi/3} times the projected part
  const Complex ph = std::exp(Complex(0.0, -std::acos(-1.0) / 3.0));

  auto success = [&](const UnitaryOp& u) {
    Vector v = u.apply(basis_state(total, 0));
    double acc = 0.0;
    for (Index s = 0; s < be.sys_dim; ++s) acc += std::norm(v(s * be.anc_dim()));
    return acc;
  };

  UnitaryOp::Ptr amped;
  if (total <= 2048) {
    Matrix u = to_dense(*be.unitary, 2048);
    const Matrix u0 = u;
    Vector anc_mask(total);
    for (Index i = 0; i < total; ++i) anc_mask(i) = (i % be.anc_dim() == 0) ? ph : Complex(0, 0);
    for (int level = 0; level < m; ++level) {
      Matrix us = u;
      us.col(0) -= ph * u.col(0);              // U (I - e^{-i pi/3}|0><0|) has col0 scaled
      Matrix t = us * u.adjoint();             // U R_s U^+
      for (Index i = 0; i < total; ++i)
        if (i % be.anc_dim() == 0) t.col(i) -= ph * t.col(i);  // right-multiply R_t
      u = t * u;
    }
    amped = make_dense(u, false);
  } else {
    UnitaryOp::Ptr u = be.unitary;
    UnitaryOp::Ptr rs = make_basis_phase(total, 0, Complex(1.0, 0.0) - ph);
    UnitaryOp::Ptr rt = make_ancilla_phase(be.sys_dim, be.anc_dim(), Complex(1.0, 0.0) - ph, 1.0);
    for (int level = 0; level < m; ++level)
      u = make_compose({u, rs, make_adjoint(u), rt, u});
    amped = u;
  }

  FixedPointResult res;
  res.levels = m;
  res.eta = 1.0 - success(*be.unitary);
  res.success_prob = success(*amped);

  // The recursion rotates the amplified amplitude's phase; undo it with a
  // classically computed global phase so the corner stays aligned with |psi>.
  {
    Vector col_in = be.unitary->apply(basis_state(total, 0));
    Vector col_out = amped->apply(basis_state(total, 0));
    Complex overlap = 0.0;
    for (Index s = 0; s < be.sys_dim; ++s)
      overlap += std::conj(col_in(s * be.anc_dim())) * col_out(s * be.anc_dim());
    if (std::abs(overlap) > 1e-14) {
      const Complex fix = std::conj(overlap) / std::abs(overlap);
      amped = make_compose({make_ancilla_phase(total, 1, fix, fix), amped});
    }
  }

  const int n = log2_exact(be.sys_dim);
  const std::vector<Index> dims{be.sys_dim, be.sys_dim, be.anc_dim()};
  BlockEncoding out;
  out.unitary = make_compose({make_permute(dims, {1, 0, 2}), make_embed(amped, dims, {1, 2})});
  out.alpha = 1.0;
  out.eps = 2.0 * be.eps + std::pow(std::max(res.eta, 0.0), std::pow(3.0, m)) + kFloatSlack;
  out.ancillas = be.ancillas + n;
  out.sys_dim = be.sys_dim;
  res.encoding = std::move(out);
  return res;
}

/// K = S^l J with S = -J L J^+ L and L the ancilla-zero reflection:
/// oblivious amplitude amplification of a block-encoded approximate isometry.
inline UnitaryOp::Ptr robust_oaa(const BlockEncoding& j, int iterations) {
  validate_encoding(j);
  if (iterations < 0) throw Error("robust_oaa: negative iteration count");
  UnitaryOp::Ptr l = make_ancilla_phase(j.sys_dim, j.anc_dim(), 1.0, -1.0);
  UnitaryOp::Ptr minus = make_ancilla_phase(j.sys_dim, j.anc_dim(), -1.0, -1.0);  // global -I
  std::vector<UnitaryOp::Ptr> chain;
  for (int i = 0; i < iterations; ++i) {
    chain.push_back(minus);
    chain.push_back(j.unitary);
    chain.push_back(l);
    chain.push_back(make_adjoint(j.unitary));
    chain.push_back(l);
  }
  chain.push_back(j.unitary);
  return make_compose(std::move(chain));
}

/// Iteration count with alpha = 1/sin(pi/(2(2l+1))): smallest l whose tuned
/// alpha reaches the given value.
inline int oaa_iterations_for_alpha(double alpha) {
  const double pi = std::acos(-1.0);
  int l = 0;
  while (1.0 / std::sin(pi / (2.0 * (2.0 * l + 1.0))) < alpha - 1e-12) {
    ++l;
    if (l > 1000) throw Error("oaa_iterations_for_alpha: alpha too large");
  }
  return l;
}

inline double oaa_tuned_alpha(int l) {
  const double pi = std::acos(-1.0);
  return 1.0 / std::sin(pi / (2.0 * (2.0 * l + 1.0)));
}

}  // namespace deskq
