#pragma once

// Matrix-multiplicative-weights feasibility solver for small-width SDP
// instances (Phi, B): maintain Gibbs-form iterates driven by trace-distance
// oracle directions, average the iterates, and report the residual
// ||Phi(rho) - B||_1. Oracles come in an exact flavor (spectral sign /
// exact exponential) and a polynomial flavor (sign series / truncated
// exponential series), both asserting their goodness per call. A fully
// block-encoded run reproduces the iteration through encoding combinators
// and synthesizes a purification of the averaged output.

#include "deskq/block_encoding.hpp"
#include "deskq/channel.hpp"
#include "deskq/cheb.hpp"
#include "deskq/gibbs.hpp"
#include "deskq/matrix.hpp"

#include <functional>
#include <random>
#include <string>

namespace deskq {

struct SdpInstance {
  SuperOp phi;  // Hermiticity-preserving, D -> D
  Matrix b;     // Hermitian, ||B||_inf <= 1 when width-certified
  Index dim = 0;
  bool width_certified = false;
};

/// Spot-check the small-width conditions: ||B||_inf <= 1 and contraction of
/// the adjoint map on random Hermitian directions. Sets the flag on success.
inline void certify_width(SdpInstance& inst, unsigned seed = 42, int samples = 50) {
  if (inst.phi.dim_in() != inst.dim || inst.phi.dim_out() != inst.dim)
    throw Error("certify_width: map dimensions do not match instance");
  if (!is_hermitian(inst.b, 1e-9)) throw Error("certify_width: B not Hermitian");
  if (spectral_norm(inst.b) > 1.0 + 1e-9) throw Error("certify_width: ||B|| exceeds 1");
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Matrix y(inst.dim, inst.dim);
    for (Index i = 0; i < inst.dim; ++i)
      for (Index j = 0; j < inst.dim; ++j) y(i, j) = Complex(n(g), n(g));
    y = hermitian_part(y);
    y /= spectral_norm(y);
    if (spectral_norm(inst.phi.apply_adjoint(y)) > 1.0 + 1e-6)
      throw Error("certify_width: adjoint map not contracting on sample " + std::to_string(s));
  }
  inst.width_certified = true;
}

inline double sdp_residual(const SdpInstance& inst, const Matrix& rho) {
  return trace_norm(inst.phi.apply(rho) - inst.b);
}

/// Exact trace-distance oracle: sgn(M) spectrally. (C, 0)-good for any C.
inline Matrix exact_td_oracle(const Matrix& m) {
  return matfunc_herm(m, [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

/// Polynomial trace-distance oracle: P_d^sgn(M/C) with kappa = delta/(6 D C).
/// Norm and pairing goodness are asserted on every call.
inline Matrix poly_td_oracle(const Matrix& m, double width_c, double delta) {
  const Index d = m.rows();
  if (spectral_norm(m) > width_c + 1e-9) throw Error("poly_td_oracle: ||M|| exceeds C");
  const double kappa = delta / (6.0 * static_cast<double>(d) * width_c);
  const ChebSeries series = sign_series(kappa);
  Matrix h = matfunc_herm(m / width_c, [&](double x) { return cheb_eval(series, x); });
  if (spectral_norm(h) > 2.0 + 1e-9) throw Error("poly_td_oracle: output norm exceeds 2");
  const double pairing = hs_inner(h, m).real();
  if (std::abs(pairing - trace_norm(m)) > delta + 1e-9)
    throw Error("poly_td_oracle: pairing misses trace norm beyond delta");
  return h;
}

/// Exact Gibbs oracle: exp(-eps(M - lambda_min I)) normalized (shift-invariant).
inline Matrix exact_gibbs_oracle(const Matrix& m, double eps) {
  HermEig eig = herm_eig(m);
  const double shift = eig.values(eig.values.size() - 1);  // smallest eigenvalue
  Vector fv(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) fv(i) = std::exp(-eps * (eig.values(i) - shift));
  Matrix x = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
  return x / x.trace().real();
}

/// Polynomial Gibbs oracle: evaluate the Chebyshev rewrite of the truncated
/// exponential on the centered spectrum; trace-norm distance to the exact
/// Gibbs state is asserted to stay below delta.
inline Matrix poly_gibbs_oracle(const Matrix& m, double eps, double delta) {
  HermEig eig = herm_eig(m);
  const double hi = eig.values(0), lo = eig.values(eig.values.size() - 1);
  const double center = 0.5 * (hi + lo);
  const double radius = std::max(1.0, 0.5 * (hi - lo));
  const double b = eps * radius;  // exponent scale after centering
  const int k = exp_degree_for(b, delta / (8.0 * static_cast<double>(m.rows()))) + 2;
  const ChebSeries series = exp_series(-b, k);
  Vector fv(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i)
    fv(i) = cheb_eval(series, (eig.values(i) - center) / radius);
  Matrix x = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
  Matrix out = x / x.trace().real();
  if (trace_norm(out - exact_gibbs_oracle(m, eps)) > delta + 1e-9)
    throw Error("poly_gibbs_oracle: output misses the Gibbs state beyond delta");
  return out;
}

struct OraclePair {
  std::function<Matrix(const Matrix&)> trace_distance;
  std::function<Matrix(const Matrix&, double)> gibbs;
  double delta = 0.0;
  std::string name;
};

inline OraclePair exact_oracles() {
  OraclePair p;
  p.trace_distance = [](const Matrix& m) { return exact_td_oracle(m); };
  p.gibbs = [](const Matrix& m, double eps) { return exact_gibbs_oracle(m, eps); };
  p.delta = 0.0;
  p.name = "exact";
  return p;
}

inline OraclePair poly_oracles(double width_c, double delta) {
  OraclePair p;
  p.trace_distance = [width_c, delta](const Matrix& m) {
    return poly_td_oracle(m, width_c, delta);
  };
  p.gibbs = [delta](const Matrix& m, double eps) { return poly_gibbs_oracle(m, eps, delta); };
  p.delta = delta;
  p.name = "poly";
  return p;
}

struct SolveOptions {
  bool store_iterates = false;
  bool check_invariants = true;  // oracle goodness, width propagation, potential
};

struct SolveReport {
  Matrix rho;              // averaged output
  double residual = 0.0;   // ||Phi(rho) - B||_1
  double epsilon = 0.0;
  double delta = 0.0;
  int iterations = 0;      // T = ceil(ln D / eps^2)
  std::vector<Matrix> iterates;
  double potential_margin = 0.0;   // min over t of (lhs - rhs) in the potential bound
  double max_direction_norm = 0.0; // max_t ||H_t||_inf
  double max_width_norm = 0.0;     // max_t ||Phi(rho_t) - B||_inf
};

/// Algorithm: rho_1 = I/D; H_t from the trace-distance oracle on
/// Phi(rho_t) - B; rho_{t+1} from the Gibbs oracle on Phi*(H_1+...+H_t);
/// output the average. With (2, delta)- and (2T, delta)-good oracles the
/// residual is at most 2 beta + 11 eps + 2 delta.
inline SolveReport solve(const SdpInstance& inst, double eps, const OraclePair& oracles,
                         const SolveOptions& opt = {}) {
  if (!inst.width_certified) throw Error("solve: instance width not certified");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("solve: eps must lie in (0,1)");
  const Index d = inst.dim;
  const int iterations =
      static_cast<int>(std::ceil(std::log(static_cast<double>(d)) / (eps * eps)));
  const int t_max = std::max(1, iterations);

  SolveReport report;
  report.epsilon = eps;
  report.delta = oracles.delta;
  report.iterations = t_max;

  Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
  Matrix h_sum = Matrix::Zero(d, d);
  Matrix rho_avg = Matrix::Zero(d, d);
  double pairing_sum = 0.0;  // sum_t <rho_t, Phi*(H_t)>
  report.potential_margin = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= t_max; ++t) {
    Matrix m = inst.phi.apply(rho) - inst.b;
    Matrix h = oracles.trace_distance(m);
    h_sum += h;
    rho_avg += rho;
    if (opt.store_iterates) report.iterates.push_back(rho);

    if (opt.check_invariants) {
      const double h_norm = spectral_norm(h);
      const double width_norm = spectral_norm(m);
      report.max_direction_norm = std::max(report.max_direction_norm, h_norm);
      report.max_width_norm = std::max(report.max_width_norm, width_norm);
      if (h_norm > 2.0 + 1e-9) throw Error("solve: oracle direction norm exceeds 2");
      if (width_norm > 2.0 + 1e-9) throw Error("solve: width propagation violated");
      if (std::abs(hs_inner(h, m).real() - trace_norm(m)) > oracles.delta + 1e-9)
        throw Error("solve: trace-distance oracle not delta-good at iteration " +
                    std::to_string(t));

      pairing_sum += hs_inner(rho, inst.phi.apply_adjoint(h)).real();
      HermEig eig = herm_eig(inst.phi.apply_adjoint(h_sum));
      const double lambda_min = eig.values(eig.values.size() - 1);
      const double rhs = pairing_sum - std::log(static_cast<double>(d)) / eps -
                         2.0 * t * (eps + oracles.delta + std::sinh(2.0 * eps));
      report.potential_margin = std::min(report.potential_margin, lambda_min - rhs);
      if (lambda_min < rhs - 1e-7)
        throw Error("solve: potential inequality violated at iteration " + std::to_string(t));
    }

    if (t < t_max) {
      rho = oracles.gibbs(inst.phi.apply_adjoint(h_sum), eps);
      if (opt.check_invariants && oracles.delta > 0.0) {
        Matrix exact = exact_gibbs_oracle(inst.phi.apply_adjoint(h_sum), eps);
        if (trace_norm(rho - exact) > oracles.delta + 1e-9)
          throw Error("solve: Gibbs oracle not delta-good at iteration " + std::to_string(t));
      }
    } else {
      rho = oracles.gibbs(inst.phi.apply_adjoint(h_sum), eps);
    }
  }

  report.rho = rho_avg / static_cast<double>(t_max);
  report.residual = sdp_residual(inst, report.rho);
  return report;
}

/// Dual-witness lower bound on the residual: <Phi(rho) - B, H> for any
/// Hermitian H with ||H||_inf <= 1 never exceeds ||Phi(rho) - B||_1.
inline double residual_witness_bound(const SdpInstance& inst, const Matrix& rho,
                                     const Matrix& witness) {
  if (spectral_norm(witness) > 1.0 + 1e-9) throw Error("residual_witness_bound: ||H|| > 1");
  return hs_inner(inst.phi.apply(rho) - inst.b, witness).real();
}

// ---- block-encoded pipeline ----------------------------------------------

struct StageLedger {
  int iteration = 0;
  std::string stage;
  double alpha = 0.0;
  double eps = 0.0;
  int ancillas = 0;
};

struct BlockSolveResult {
  Vector purification;      // (1/sqrt(T)) sum_t |t> |psi_t>, control first
  Index control_dim = 0;    // power-of-two control register holding t
  Index state_dim = 0;      // dimension of each padded |psi_t>
  SolveReport report;       // classical view of the block-encoded iterates
  std::vector<StageLedger> ledger;
  double delta_effective = 0.0;  // oracle goodness realized by the sign series
  double worst_gibbs_deviation = 0.0;  // actual distance of each iterate to its Gibbs target
  bool budget_exceeded = false;        // blow-up beyond target_be_error, reported not thrown
};

/// Reduced state of the synthesized purification on the first logD qubits of
/// the psi register.
inline Matrix block_solve_output_state(const BlockSolveResult& res, Index d) {
  const Index rest = res.state_dim / d;
  Matrix rho = Matrix::Zero(d, d);
  for (Index t = 0; t < res.control_dim; ++t)
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) {
        Complex acc = 0.0;
        for (Index r = 0; r < rest; ++r)
          acc += res.purification(t * res.state_dim + i * rest + r) *
                 std::conj(res.purification(t * res.state_dim + j * rest + r));
        rho(i, j) += acc;
      }
  return rho;
}

/// Run the iteration entirely through block encodings: superoperator
/// application on the iterate, an entry encoding of B, their difference, the
/// sign-polynomial direction, the accumulated adjoint map, and a Gibbs
/// preparation whose purified unitary doubles as the iterate's purification.
/// A control-indexed superposition of the per-iterate purifications is the
/// returned output.
inline BlockSolveResult solve_block_encoded(const SdpInstance& inst, double eps, double delta,
                                            double target_be_error) {
  if (!inst.width_certified) throw Error("solve_block_encoded: width not certified");
  if (inst.dim > 8) throw Error("solve_block_encoded: desk scale caps D at 8");
  if (eps < 0.2) throw Error("solve_block_encoded: eps below desk floor 0.2");
  const Index d = inst.dim;
  const int t_max =
      std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(d)) / (eps * eps))));

  BlockSolveResult res;
  res.report.epsilon = eps;
  res.report.delta = delta;
  res.report.iterations = t_max;
  res.report.potential_margin = std::numeric_limits<double>::infinity();

  auto log_stage = [&](int t, const char* stage, const BlockEncoding& be) {
    res.ledger.push_back({t, stage, be.alpha, be.eps, be.ancillas});
  };

  // rho_1 = I/D from an explicit maximally entangled preparation
  const Matrix prep_phi = detail::unitary_with_first_column(maximally_entangled(d));
  std::vector<BlockEncoding> rho_enc;
  rho_enc.push_back(from_state_prep(prep_phi, d, d));
  std::vector<Vector> purifications;  // |psi_t> on d * (total/d) amplitudes
  {
    Vector psi = Vector::Zero(d * d);
    for (Index j = 0; j < d; ++j) psi(j * d + j) = 1.0 / std::sqrt(static_cast<double>(d));
    purifications.push_back(psi);
  }
  log_stage(1, "rho_1", rho_enc.front());

  std::vector<BlockEncoding> h_enc;
  Matrix h_sum = Matrix::Zero(d, d);
  Matrix rho_avg = Matrix::Zero(d, d);
  double pairing_sum = 0.0;
  BlockEncoding be_b = from_entries(inst.b);

  for (int t = 1; t <= t_max; ++t) {
    const BlockEncoding& rho_t = rho_enc.back();
    Matrix rho_mat = extract_block(rho_t);
    rho_avg += rho_mat;

    // (1) Phi(rho_t), (2) B, (3) difference
    BlockEncoding be_phi_rho = be_apply_superop(rho_t, inst.phi);
    log_stage(t, "phi(rho)", be_phi_rho);
    BlockEncoding be_m =
        be_lincomb({Complex(1.0, 0.0), Complex(-1.0, 0.0)}, {be_phi_rho, be_b});
    log_stage(t, "phi(rho)-B", be_m);

    // (4) trace-distance direction as a sign polynomial of the encoded block
    const double width_c = be_m.alpha;
    const double kappa = std::max(1e-4, delta / (6.0 * static_cast<double>(d) * width_c));
    res.delta_effective =
        std::max(res.delta_effective, 6.0 * static_cast<double>(d) * width_c * kappa);
    BlockEncoding be_h = poly_of_be(be_m, sign_series(kappa));
    log_stage(t, "H_t", be_h);
    h_enc.push_back(be_h);

    Matrix m_mat = extract_block(be_m);
    Matrix h_mat = extract_block(be_h);
    h_sum += h_mat;
    if (spectral_norm(h_mat) > 2.0 + 1e-9)
      throw Error("solve_block_encoded: direction norm exceeds 2");
    if (std::abs(hs_inner(h_mat, m_mat).real() - trace_norm(m_mat)) > res.delta_effective + 1e-9)
      throw Error("solve_block_encoded: sign-polynomial oracle missed goodness");
    res.report.max_direction_norm =
        std::max(res.report.max_direction_norm, spectral_norm(h_mat));
    res.report.max_width_norm = std::max(res.report.max_width_norm, spectral_norm(m_mat));

    pairing_sum += hs_inner(rho_mat, inst.phi.apply_adjoint(h_mat)).real();
    {
      HermEig eig = herm_eig(inst.phi.apply_adjoint(h_sum));
      const double rhs = pairing_sum - std::log(static_cast<double>(d)) / eps -
                         2.0 * t * (eps + res.delta_effective + std::sinh(2.0 * eps));
      res.report.potential_margin =
          std::min(res.report.potential_margin, eig.values(eig.values.size() - 1) - rhs);
    }

    if (t == t_max) break;

    // (5) H_1 + ... + H_t, (6) adjoint map, (7) Gibbs iterate
    BlockEncoding be_hsum =
        h_enc.size() == 1
            ? h_enc.front()
            : be_lincomb(std::vector<Complex>(h_enc.size(), Complex(1.0, 0.0)), h_enc);
    log_stage(t, "sum H", be_hsum);
    BlockEncoding be_x = be_apply_superop(be_hsum, inst.phi.adjoint());
    log_stage(t, "phi*(sum H)", be_x);

    GibbsRequest req;
    req.hamiltonian = be_x;
    req.beta = -eps;
    req.norm_bound = 2.0 * t + be_x.eps + 1e-6;
    req.target_error = std::min(1e-4, target_be_error);
    GibbsPureResult pure = gibbs_pure_be(req);
    log_stage(t, "gibbs purified", pure.encoding);

    BlockEncoding next = from_state_prep(pure.encoding.unitary, d,
                                         pure.encoding.total_dim() / d);
    next.eps = 2.0 * pure.state_budget + kFloatSlack;
    log_stage(t + 1, "rho_{t+1}", next);
    rho_enc.push_back(next);
    purifications.push_back(
        pure.encoding.unitary->apply(basis_state(pure.encoding.total_dim(), 0)));

    if (next.eps > target_be_error)
      throw Error("solve_block_encoded: per-iterate encoding budget " +
                  std::to_string(next.eps) + " exceeds target " +
                  std::to_string(target_be_error));
  }

  res.report.rho = rho_avg / static_cast<double>(t_max);
  res.report.residual = sdp_residual(inst, res.report.rho);

  // control-indexed superposition of the per-iterate purifications
  Index state_dim = 0;
  for (const Vector& psi : purifications) state_dim = std::max(state_dim, psi.size());
  Index control = 1;
  while (control < static_cast<Index>(purifications.size())) control <<= 1;
  Vector big = Vector::Zero(control * state_dim);
  const double amp = 1.0 / std::sqrt(static_cast<double>(purifications.size()));
  for (std::size_t t = 0; t < purifications.size(); ++t) {
    const Vector& psi = purifications[t];
    const Index pad = state_dim / psi.size();
    for (Index i = 0; i < psi.size(); ++i)
      big(static_cast<Index>(t) * state_dim + i * pad) = amp * psi(i);
  }
  res.purification = std::move(big);
  res.control_dim = control;
  res.state_dim = state_dim;
  return res;
}

// ---- instance builders -----------------------------------------------------

/// Feasible instance: B := Phi(sigma) for a random density sigma and a random
/// channel Phi; beta = 0 by construction and the width conditions hold.
inline SdpInstance feasible_instance(std::mt19937_64& g, Index d, int kraus_count = 3) {
  SdpInstance inst;
  inst.dim = d;
  std::normal_distribution<double> n(0.0, 1.0);
  // random channel via Kraus normalization
  std::vector<Matrix> ks;
  Matrix acc = Matrix::Zero(d, d);
  for (int i = 0; i < kraus_count; ++i) {
    Matrix k(d, d);
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c) k(r, c) = 0.5 * Complex(n(g), n(g));
    ks.push_back(k);
    acc += k.adjoint() * k;
  }
  HermEig eig = herm_eig(acc);
  Vector inv_sqrt(d);
  for (Index i = 0; i < d; ++i) inv_sqrt(i) = 1.0 / std::sqrt(eig.values(i));
  Matrix s = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.adjoint();
  for (Matrix& k : ks) k = k * s;
  inst.phi = SuperOp::from_kraus(std::move(ks));

  Matrix rand(d, d);
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c) rand(r, c) = Complex(n(g), n(g));
  Matrix sigma = rand * rand.adjoint();
  sigma /= sigma.trace().real();
  inst.b = inst.phi.apply(sigma);
  certify_width(inst);
  return inst;
}

/// The identity-channel fixed point: Phi = id, B = I/D. Every iterate stays
/// at I/D and the residual vanishes.
inline SdpInstance identity_fixture(Index d) {
  SdpInstance inst;
  inst.dim = d;
  inst.phi = SuperOp::identity_map(d);
  inst.b = Matrix::Identity(d, d) / static_cast<double>(d);
  certify_width(inst);
  return inst;
}

}  // namespace deskq
