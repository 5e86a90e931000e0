#pragma once

// Chebyshev-basis polynomial machinery: Clenshaw evaluation, orthogonal
// projection onto T_0..T_d by Gauss-Chebyshev quadrature, and the three
// series this project actually needs: a sign approximation built from a
// scaled error function, a square-root approximation, and the Chebyshev
// rewrite of the truncated exponential Taylor series.

#include "deskq/matrix.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>

namespace deskq {

struct ChebSeries {
  RealVector coeffs;  // c_0 .. c_d

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  /// Full l1 norm sum_{i>=0} |c_i| (this is the LCU normalisation).
  double l1() const { return coeffs.cwiseAbs().sum(); }
  /// Tail norm sum_{i>=1} |c_i|.
  double l1_tail() const { return l1() - std::abs(coeffs(0)); }
  bool is_odd(double tol = 0.0) const {
    for (Index i = 0; i < coeffs.size(); i += 2)
      if (std::abs(coeffs(i)) > tol) return false;
    return true;
  }
};

/// Clenshaw-stable evaluation of sum_i c_i T_i(x) for |x| <= 1 + 1e-12.
inline double cheb_eval(const ChebSeries& s, double x) {
  if (std::abs(x) > 1.0 + 1e-12) throw Error("cheb_eval: |x| > 1");
  x = std::clamp(x, -1.0, 1.0);
  const int d = s.degree();
  double b1 = 0.0, b2 = 0.0;
  for (int k = d; k >= 1; --k) {
    const double b0 = 2.0 * x * b1 - b2 + s.coeffs(k);
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + s.coeffs(0);
}

struct QuadratureOptions {
  Index start_nodes = 64;
  Index node_cap = Index(1) << 22;
  double stability_tol = 1e-10;
  int parity = 0;  // 0: none, 1: odd target (even coeffs forced to 0), 2: even target
};

/// Orthogonal projection of f onto T_0..T_d under <f,g> = (2/pi) int f g / sqrt(1-x^2).
/// Gauss-Chebyshev quadrature in theta (x = cos theta) removes the singular weight;
/// node count doubles until no coefficient moves by more than stability_tol.
inline ChebSeries cheb_project(const std::function<double(double)>& f, int d,
                               QuadratureOptions opt = {}) {
  if (d < 0) throw Error("cheb_project: negative degree");
  const double pi = std::acos(-1.0);
  auto sweep = [&](Index m) {
    RealVector c = RealVector::Zero(d + 1);
    for (Index j = 0; j < m; ++j) {
      const double theta = (static_cast<double>(j) + 0.5) * pi / static_cast<double>(m);
      const double fx = f(std::cos(theta));
      // cos(i theta) by recurrence
      double c0 = 1.0, c1 = std::cos(theta);
      const double twoc = 2.0 * c1;
      for (int i = 0; i <= d; ++i) {
        double ci;
        if (i == 0)
          ci = c0;
        else if (i == 1)
          ci = c1;
        else {
          ci = twoc * c1 - c0;
          c0 = c1;
          c1 = ci;
        }
        c(i) += fx * ci;
      }
    }
    c *= 2.0 / static_cast<double>(m);
    c(0) *= 0.5;  // <T_0,T_0> = 2
    if (opt.parity == 1)
      for (Index i = 0; i <= d; i += 2) c(i) = 0.0;
    if (opt.parity == 2)
      for (Index i = 1; i <= d; i += 2) c(i) = 0.0;
    return c;
  };

  Index m = std::max<Index>(opt.start_nodes, 4 * static_cast<Index>(d) + 4);
  if (m % 2) ++m;
  RealVector prev = sweep(m);
  while (true) {
    m *= 2;
    if (m > opt.node_cap)
      throw Error("cheb_project: quadrature did not converge within node cap");
    RealVector cur = sweep(m);
    if ((cur - prev).cwiseAbs().maxCoeff() <= opt.stability_tol) {
      ChebSeries out;
      out.coeffs = cur;
      return out;
    }
    prev = cur;
  }
}

namespace detail {

inline double sign_grid_error(const ChebSeries& s, double kappa) {
  // max |P(x) - sgn(x)| on kappa <= |x| <= 1, sampled on a 10/kappa-point grid
  const Index n = static_cast<Index>(std::ceil(10.0 / kappa));
  double worst = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double x = kappa + (1.0 - kappa) * static_cast<double>(i) / static_cast<double>(n);
    worst = std::max(worst, std::abs(cheb_eval(s, x) - 1.0));
    worst = std::max(worst, std::abs(cheb_eval(s, -x) + 1.0));
  }
  return worst;
}

inline double bound_grid_max(const ChebSeries& s, Index n = 2000) {
  double worst = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n);
    worst = std::max(worst, std::abs(cheb_eval(s, x)));
  }
  return worst;
}

}  // namespace detail

// Degree guard for the adaptive series. The trace-distance oracle instantiated
// at D = 8 with delta = 0.05 already needs degree ~8e4 with the fixed erf
// target, so the guard sits well above that; exceeding it is an error, never
// silent degradation.
inline constexpr int kSeriesDegreeCap = 100000;

namespace detail {

template <typename Builder>
const ChebSeries& cached_series(const char* tag, double key, Builder&& build) {
  static std::map<std::pair<std::string, long long>, ChebSeries> cache;
  static std::mutex mutex;
  const auto map_key = std::make_pair(std::string(tag),
                                      static_cast<long long>(std::llround(key * 1e12)));
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(map_key);
    if (it != cache.end()) return it->second;
  }
  ChebSeries s = build();
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(map_key, std::move(s)).first->second;
}

}  // namespace detail

/// Odd Chebyshev approximation to sgn with |P - sgn| <= kappa on kappa <= |x| <= 1
/// and |P| <= 1 + kappa on [-1,1]. Target is erf(kx) with
/// k = sqrt(2 ln(2/(pi kappa^2))) / kappa; the degree doubles until the grid
/// check passes. Verified a posteriori, so the asymptotic constants never matter.
/// Results are memoized per kappa; construction at small kappa is expensive.
inline ChebSeries sign_series(double kappa) {
  if (!(kappa > 0 && kappa < 1)) throw Error("sign_series: kappa in (0,1) required");
  if (kappa < 1e-4) throw Error("sign_series: kappa below desk-scale floor 1e-4");
  return detail::cached_series("sign", kappa, [kappa]() {
    const double pi = std::acos(-1.0);
    const double k = std::sqrt(2.0 * std::log(2.0 / (pi * kappa * kappa))) / kappa;
    auto target = [k](double x) { return std::erf(k * x); };

    int d =
        static_cast<int>(std::ceil(k * std::sqrt(std::max(1.0, std::log(1.0 / (kappa * kappa))))));
    if (d % 2 == 0) ++d;
    QuadratureOptions opt;
    opt.parity = 1;
    while (d <= kSeriesDegreeCap) {
      ChebSeries s = cheb_project(target, d, opt);
      if (detail::sign_grid_error(s, kappa) <= kappa && detail::bound_grid_max(s) <= 1.0 + kappa)
        return s;
      d = 2 * d + 1;
    }
    throw Error("sign_series: grid verification failed at degree cap");
  });
}

/// Chebyshev approximation to sqrt((x+1)/2) with error <= kappa on [-1,1].
/// Projects g(x) = sqrt((1-c)(x+1)/2 + c), c = kappa^2/8, which keeps the
/// integrand analytic on the interval.
inline ChebSeries sqrt_series(double kappa) {
  if (!(kappa > 0 && kappa < 1)) throw Error("sqrt_series: kappa in (0,1) required");
  if (kappa < 1e-4) throw Error("sqrt_series: kappa below desk-scale floor 1e-4");
  return detail::cached_series("sqrt", kappa, [kappa]() {
    const double c = kappa * kappa / 8.0;
    auto target = [c](double x) { return std::sqrt((1.0 - c) * (x + 1.0) / 2.0 + c); };

    auto grid_error = [](const ChebSeries& s) {
      double worst = 0.0;
      for (Index i = 0; i <= 2000; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / 2000.0;
        worst = std::max(worst, std::abs(cheb_eval(s, x) - std::sqrt((x + 1.0) / 2.0)));
      }
      return worst;
    };

    int d = std::max(16, static_cast<int>(std::ceil(std::log(1.0 / kappa) / std::sqrt(c))));
    while (d <= kSeriesDegreeCap) {
      ChebSeries s = cheb_project(target, d);
      if (grid_error(s) <= kappa) return s;
      d *= 2;
    }
    throw Error("sqrt_series: grid verification failed at degree cap");
  });
}

namespace detail {

/// Chebyshev coefficients of x^n: x^n = 2^{1-n} sum' C(n, (n-j)/2) T_j,
/// j = n, n-2, ..., with the j = 0 term halved. All coefficients nonnegative.
inline void add_monomial_in_cheb(RealVector& acc, int n, double weight) {
  double binom = 1.0;  // C(n, 0)
  // walk m = 0..n/2 with j = n - 2m; C(n, m) updated incrementally
  for (int m = 0; 2 * m <= n; ++m) {
    const int j = n - 2 * m;
    double term = weight * std::ldexp(binom, 1 - n);
    if (j == 0) term *= 0.5;
    acc(j) += term;
    binom *= static_cast<double>(n - m) / static_cast<double>(m + 1);
  }
}

}  // namespace detail

/// Chebyshev rewrite of the degree-k Taylor polynomial of exp(b x) on [-1,1].
/// For b > 0 every coefficient is nonnegative. The uniform error against
/// exp(b x) is at most 2 e^{2e|b| - k}.
inline ChebSeries exp_series(double beta_alpha, int k) {
  if (k < 0) throw Error("exp_series: degree must be >= 0");
  RealVector acc = RealVector::Zero(k + 1);
  double taylor = 1.0;  // b^n / n!
  for (int n = 0; n <= k; ++n) {
    if (!std::isfinite(taylor)) throw Error("exp_series: coefficient overflow");
    detail::add_monomial_in_cheb(acc, n, taylor);
    taylor *= beta_alpha / static_cast<double>(n + 1);
  }
  ChebSeries out;
  out.coeffs = acc;
  return out;
}

/// Truncation bound used when exp_series backs a block-encoding transform.
inline double exp_series_error_bound(double beta_alpha, int k) {
  const double b = std::abs(beta_alpha);
  return 2.0 * std::exp(2.0 * std::exp(1.0) * b - static_cast<double>(k));
}

}  // namespace deskq
