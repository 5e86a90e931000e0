#pragma once

// Gibbs-state preparation from a block-encoded Hamiltonian (purified, mixed,
// and extracted forms), repeat-until-success purification of mixed states
// through the square-root series, and Pauli-basis density-matrix entry
// estimation. Randomness is always an explicit seeded engine so runs are
// reproducible.

#include "deskq/block_encoding.hpp"
#include "deskq/cheb.hpp"

#include <random>

namespace deskq {

struct GibbsRequest {
  BlockEncoding hamiltonian;  // Hermitian block
  double beta = 0.0;          // signed inverse temperature; state ~ exp(+beta A)
  double norm_bound = 1.0;    // p with ||A||_inf <= p
  double target_error = 1e-4;
  int max_amplify_levels = 6;
};

inline void validate_request(const GibbsRequest& req) {
  validate_encoding(req.hamiltonian);
  if (!std::isfinite(req.beta)) throw Error("GibbsRequest: beta not finite");
  const double norm = spectral_norm(extract_block(req.hamiltonian));
  if (req.norm_bound < norm - req.hamiltonian.eps - 1e-9)
    throw Error("GibbsRequest: norm_bound below encoded operator norm");
  if (std::abs(req.beta) * req.norm_bound > 20.0)
    throw Error("GibbsRequest: beta * norm beyond desk scale");
}

/// Dense oracle: exp(beta A) / Tr(exp(beta A)).
inline Matrix gibbs_state_of(const Matrix& a, double beta) {
  Matrix e = matfunc_herm(a, [beta](double x) { return std::exp(beta * x); });
  return e / e.trace().real();
}

/// Degree for the exponential series so the truncation error meets `target`.
inline int exp_degree_for(double beta_alpha, double target) {
  const double b = std::abs(beta_alpha);
  return static_cast<int>(std::ceil(2.0 * std::exp(1.0) * b + std::log(1.0 / target))) + 2;
}

/// Encoding of exp(beta A) through the Chebyshev rewrite of the truncated
/// exponential Taylor series.
inline BlockEncoding exp_of_be(const BlockEncoding& be, double beta, int k,
                               PolyBackend backend = PolyBackend::kDilation) {
  validate_encoding(be);
  ChebSeries series = exp_series(beta * be.alpha, k);
  BlockEncoding out = poly_of_be(be, series, backend);
  out.eps += exp_series_error_bound(beta * be.alpha, k);
  if (be.target)
    out.target = matfunc_herm(*be.target, [beta](double x) { return std::exp(beta * x); });
  return out;
}

struct GibbsPureResult {
  BlockEncoding encoding;  // (1, corner_budget, .) of |Gamma><0...0|
  double corner_budget = 0.0;
  double state_budget = 0.0;  // certified deviation of the prepared purification
  double shift = 0.0;         // spectral centering applied before exponentiating
  int exp_degree = 0;
  int amplify_levels = 0;
  double eta = 0.0;
};

/// Purified Gibbs state: exponentiate half the (spectrally centered)
/// Hamiltonian, purify against the maximally entangled state, rescale the
/// claim to the normalized purification, and amplify the ancilla-zero
/// amplitude back to one.
inline GibbsPureResult gibbs_pure_be(const GibbsRequest& req) {
  validate_request(req);
  const Index d = req.hamiltonian.sys_dim;

  // center the spectrum; the Gibbs state is invariant and the post-selection
  // cost of the exponential stays bounded
  Matrix a_block = hermitian_part(extract_block(req.hamiltonian));
  HermEig eig = herm_eig(a_block);
  const double shift = 0.5 * (eig.values(0) + eig.values(eig.values.size() - 1));
  Matrix centered = a_block - shift * Matrix::Identity(d, d);
  BlockEncoding be_c =
      dilation_encoding(centered, std::max(1.0, spectral_norm(centered)), req.hamiltonian.eps);

  const double trunc_target = std::min(1e-9, req.target_error / 16.0);
  const int k = exp_degree_for(0.5 * req.beta * be_c.alpha, trunc_target);
  BlockEncoding be_exp = exp_of_be(be_c, 0.5 * req.beta, k);

  BlockEncoding pure = be_purify(be_exp);

  // rescale: the normalized purification |Gamma> is the corner column over its norm
  Vector col = pure.unitary->apply(basis_state(pure.total_dim(), 0));
  double mu = 0.0;  // norm of the unnormalized purification column, times alpha
  {
    double acc = 0.0;
    for (Index s = 0; s < pure.sys_dim; ++s) acc += std::norm(col(s * pure.anc_dim()));
    mu = std::sqrt(acc) * pure.alpha;
  }
  if (mu <= 0) throw Error("gibbs_pure_be: vanishing purification norm");
  BlockEncoding rescaled = pure;
  rescaled.alpha = pure.alpha / mu;
  rescaled.eps = pure.eps / mu;
  rescaled.target.reset();

  // smallest level count with (1 - success)^{3^m} below target, capped
  const double eta0 = 1.0 - 1.0 / (rescaled.alpha * rescaled.alpha);
  const double amp_target = std::min(1e-8, req.target_error / 16.0);
  int m = 0;
  while (m < req.max_amplify_levels &&
         std::pow(std::max(eta0, 0.0), std::pow(3.0, m)) > amp_target)
    ++m;
  FixedPointResult amp = fixed_point_amplify(rescaled, m);

  GibbsPureResult res;
  res.encoding = amp.encoding;
  res.corner_budget = amp.encoding.eps;
  // junk outside the ancilla-zero subspace is measured, not worst-cased
  res.state_budget = std::min(2.0, res.corner_budget) +
                     std::sqrt(std::max(0.0, 1.0 - amp.success_prob)) + kFloatSlack;
  res.shift = shift;
  res.exp_degree = k;
  res.amplify_levels = m;
  res.eta = amp.eta;
  return res;
}

/// Mixed Gibbs state: wrap the purified encoding's unitary as a state
/// preparation and take the reduced-density block encoding.
struct GibbsMixedResult {
  BlockEncoding encoding;  // (1, budget, .) of exp(beta A)/Tr(exp(beta A))
  double budget = 0.0;
  GibbsPureResult pure;
};

inline GibbsMixedResult gibbs_mixed_be(const GibbsRequest& req) {
  GibbsPureResult pure = gibbs_pure_be(req);
  const Index d = req.hamiltonian.sys_dim;
  const BlockEncoding& v = pure.encoding;
  BlockEncoding out = from_state_prep(v.unitary, d, v.total_dim() / d);
  out.eps = 2.0 * pure.state_budget + kFloatSlack;
  GibbsMixedResult res;
  res.encoding = std::move(out);
  res.budget = res.encoding.eps;
  res.pure = std::move(pure);
  return res;
}

struct GibbsExtractResult {
  Vector state;             // the prepared purification, ancillas included
  Index purified_dim = 0;   // dimension of the 2n-qubit purification register
  double budget = 0.0;      // certified deviation from |Gamma> (x) |0...0>
  GibbsPureResult pure;
};

/// Run the purified-Gibbs unitary on |0...0> and return the full state vector.
inline GibbsExtractResult gibbs_extract(const GibbsRequest& req) {
  GibbsPureResult pure = gibbs_pure_be(req);
  GibbsExtractResult res;
  res.state = pure.encoding.unitary->apply(basis_state(pure.encoding.total_dim(), 0));
  res.purified_dim = pure.encoding.sys_dim;
  res.budget = pure.state_budget;
  res.pure = std::move(pure);
  return res;
}

/// Reduced state on the Gibbs register of an extracted purification.
inline Matrix reduced_gibbs_state(const GibbsExtractResult& r, Index d) {
  Matrix full = r.state * r.state.adjoint();
  return partial_trace(full, d, r.state.size() / d, 0);
}

struct PurifyOptions {
  double kappa = 4e-3;  // square-root series accuracy
  int attempts = 64;
  unsigned seed = 42;
};

struct PurifyResult {
  Vector state;              // purification on D (x) D
  double success_prob = 0.0; // per-attempt post-selection probability
  int attempts_used = 0;
  double failure_bound = 0.0;
  double kappa = 0.0;
};

/// Purification of a mixed state by repeat-until-success: entry-encode rho,
/// shift its block into the square-root series domain, apply the series,
/// purify, and post-select the ancillas on zero. The returned state is the
/// exact normalized post-measurement state; the seeded sampler only decides
/// which attempt succeeds.
inline PurifyResult purify_mixed(const Matrix& rho, const PurifyOptions& opt = {}) {
  if (rho.rows() != rho.cols()) throw Error("purify_mixed: not square");
  const Index d = rho.rows();
  if (!is_hermitian(rho, 1e-9)) throw Error("purify_mixed: state not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9) throw Error("purify_mixed: trace must be one");
  {
    HermEig eig = herm_eig(rho);
    if (eig.values(eig.values.size() - 1) < -1e-9)
      throw Error("purify_mixed: state not positive semidefinite");
  }

  BlockEncoding be_rho = from_entries(rho);
  // block of M = 2 rho - I sits in [-1, 1]; sqrt((M+1)/2) recovers sqrt(rho)
  BlockEncoding be_m = be_lincomb({Complex(2.0, 0.0), Complex(-1.0, 0.0)},
                                  {be_rho, identity_encoding(d)});
  BlockEncoding be_m1 = compact_encoding(be_m);
  BlockEncoding be_sqrt = poly_of_be(be_m1, sqrt_series(opt.kappa));
  BlockEncoding pure = be_purify(be_sqrt);

  Vector full = pure.unitary->apply(basis_state(pure.total_dim(), 0));
  const Index ad = pure.anc_dim();
  Vector column(pure.sys_dim);
  for (Index s = 0; s < pure.sys_dim; ++s) column(s) = full(s * ad);
  const double p = column.squaredNorm();
  if (p <= 1e-300) throw Error("purify_mixed: post-selection probability vanished");

  std::mt19937_64 g(opt.seed);
  std::bernoulli_distribution flip(std::min(1.0, p));
  PurifyResult res;
  res.success_prob = p;
  res.kappa = opt.kappa;
  res.failure_bound = std::pow(1.0 - std::min(1.0, p), opt.attempts);
  for (int attempt = 1; attempt <= opt.attempts; ++attempt) {
    if (flip(g)) {
      res.attempts_used = attempt;
      res.state = column / column.norm();
      return res;
    }
  }
  throw Error("purify_mixed: all attempts failed (bound " + std::to_string(res.failure_bound) +
              ")");
}

namespace detail {

inline Matrix pauli_single(int code) {
  switch (code) {
    case 0: return pauli_i();
    case 1: return pauli_x();
    case 2: return pauli_y();
    default: return pauli_z();
  }
}

inline Matrix pauli_string(Index qubits, Index code) {
  Matrix p = Matrix::Identity(1, 1);
  for (Index q = 0; q < qubits; ++q) {
    const int digit = static_cast<int>((code >> (2 * (qubits - 1 - q))) & 3);
    p = kron(p, pauli_single(digit));
  }
  return p;
}

}  // namespace detail

/// Pauli-basis estimate of <x| rho |y>: average expectation estimates alpha_P
/// over all Pauli strings, weighted by <x|P|y>. shots == 0 uses exact
/// expectations and reproduces the entry to float precision.
inline Complex estimate_entry(const Matrix& rho, long shots, Index x, Index y,
                              unsigned seed = 42) {
  const Index d = rho.rows();
  const Index qubits = log2_exact(d);
  if (x < 0 || x >= d || y < 0 || y >= d) throw Error("estimate_entry: index out of range");
  if (shots < 0) throw Error("estimate_entry: negative shot count");
  std::mt19937_64 g(seed);
  Complex acc = 0.0;
  const Index strings = Index(1) << (2 * qubits);
  for (Index code = 0; code < strings; ++code) {
    Matrix p = detail::pauli_string(qubits, code);
    const double expectation = (rho * p).trace().real();
    double alpha_p = expectation;
    if (shots > 0) {
      const double p_plus = std::clamp(0.5 * (1.0 + expectation), 0.0, 1.0);
      std::binomial_distribution<long> bin(shots, p_plus);
      alpha_p = 2.0 * static_cast<double>(bin(g)) / static_cast<double>(shots) - 1.0;
    }
    acc += alpha_p * p(x, y);
  }
  return acc / static_cast<double>(d);
}

/// Entry estimation from a preparation circuit: reduce prep|0...0> over the
/// trailing register and estimate on the reduced state.
inline Complex estimate_entry_from_prep(const Matrix& prep, Index dim_keep, long shots, Index x,
                                        Index y, unsigned seed = 42) {
  if (prep.cols() % dim_keep != 0) throw Error("estimate_entry_from_prep: bad split");
  Vector psi = prep.col(0);
  Matrix rho = partial_trace(psi * psi.adjoint(), dim_keep, prep.cols() / dim_keep, 0);
  return estimate_entry(rho, shots, x, y, seed);
}

}  // namespace deskq
