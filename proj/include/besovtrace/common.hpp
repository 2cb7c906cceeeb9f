#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace besov {

// ---------------------------------------------------------------------------
// Error taxonomy. ParameterError maps to CLI exit code 2, everything else 1.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& msg) : Error(msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

struct UnsupportedWaveletError : Error {
  explicit UnsupportedWaveletError(const std::string& msg) : Error(msg) {}
};

struct DependencyError : Error {
  explicit DependencyError(const std::string& msg) : Error(msg) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

struct InsufficientScaleError : Error {
  explicit InsufficientScaleError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// ---------------------------------------------------------------------------
// Counter-based RNG bits. splitmix64 is used as a keyed hash so coefficient
// fields can be evaluated lazily at any index with seed-determinism.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ v);
}

// Uniform double in [0,1) from a hash value.
inline double hash_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Least squares line fit y ~ a + b x.
// ---------------------------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of fit residuals
  double r2 = 0.0;
  int points = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit f;
  f.points = static_cast<int>(xs.size());
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InsufficientDataError("fit_line: need at least 2 points");
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0.0) throw InsufficientDataError("fit_line: degenerate abscissae");
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += e * e;
  }
  const double ss_tot = syy - sy * sy / n;
  f.residual = std::sqrt(ss_res / n);
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Low-discrepancy sequences for the Monte Carlo measure estimates.
// ---------------------------------------------------------------------------

// n-th point of the d-dimensional Kronecker sequence with the classic
// sqrt-prime irrationals. Equidistributed and stable under x -> 2^j x mod 1.
inline std::vector<double> kronecker_point(std::uint64_t n, int dim) {
  static const double alphas[] = {
      0.6180339887498949,   // 1/phi
      0.4142135623730951,   // sqrt(2)-1
      0.7320508075688772,   // sqrt(3)-1
      0.2360679774997896,   // sqrt(5)-2
  };
  std::vector<double> x(dim);
  for (int i = 0; i < dim; ++i) {
    const double a = alphas[i % 4];
    double v = std::fmod(static_cast<double>(n + 1) * a + 0.5 * (i / 4 + 1) * a * a, 1.0);
    x[i] = v < 0 ? v + 1.0 : v;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Deterministic chunked parallel map. The chunk grid is fixed (independent of
// the thread count) so floating point reductions are reproducible.
// ---------------------------------------------------------------------------

inline void parallel_for(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t, std::int64_t)>& body,
                         int chunks = 64) {
  const std::int64_t total = end - begin;
  if (total <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (total < 4096 || hw == 1) {
    body(begin, end);
    return;
  }
  if (chunks > total) chunks = static_cast<int>(total);
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  const std::int64_t step = (total + chunks - 1) / chunks;
  for (std::int64_t b = begin; b < end; b += step) ranges.emplace_back(b, std::min(b + step, end));
  std::atomic<size_t> counter{0};
  std::vector<std::thread> pool;
  const unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(ranges.size()));
  for (unsigned t = 0; t < nthreads; ++t) {
    pool.emplace_back([&ranges, &counter, &body] {
      for (;;) {
        const size_t i = counter.fetch_add(1);
        if (i >= ranges.size()) break;
        body(ranges[i].first, ranges[i].second);
      }
    });
  }
  for (auto& th : pool) th.join();
}

// torus distance on [0,1)
inline double torus_dist(double a, double b) {
  double d = std::fabs(a - b);
  d = std::fmod(d, 1.0);
  return std::min(d, 1.0 - d);
}

inline double frac(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;  // guard against fp edge at exact integers
  return f;
}

}  // namespace besov
