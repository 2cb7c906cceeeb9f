#pragma once

// Independent test oracles. These deliberately avoid the library's own code
// paths: brute-force enumerations, analytic functions, and direct quadrature.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "besovtrace/wavelet.hpp"

namespace oracle {

// G(t) = sin(2 pi t) with its exact derivative, packaged as injected samples.
inline besov::PeriodizedG sine_G(int grid_bits, int d_prime = 1) {
  const std::int64_t n = std::int64_t(1) << grid_bits;
  std::vector<double> s(n), d(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    s[i] = std::sin(2.0 * std::numbers::pi * t);
    d[i] = 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * t);
  }
  auto g = besov::PeriodizedG::from_samples(std::move(s), std::move(d), d_prime);
  return g;
}

// Composite rectangle-rule quadrature of f against Psi^l(2^j x - k) over the
// torus, from the wavelet's own sample grid. Used to produce wavelet
// coefficients of analytically known functions (L-infinity normalization,
// c = 2^{jd} int f Psi_jk in 1D).
inline double coeff_by_quadrature_1d(const besov::WaveletSystem& w, int l,
                                     const std::function<double(double)>& f, int j,
                                     std::int64_t k) {
  const std::int64_t L = w.sample_count();
  const double two_j = std::ldexp(1.0, j);
  const double h = std::ldexp(1.0, -w.grid_bits);
  const auto& s = (l == 0) ? w.phi : w.psi;
  // x = (u + k) 2^-j, u on the support grid; integral in u with weight 2^-j,
  // times the 2^{jd} normalization leaves a plain integral in u.
  double acc = 0;
  for (std::int64_t i = 0; i < L; ++i) {
    const double u = static_cast<double>(i) * h;
    double x = (u + static_cast<double>(k)) / two_j;
    x -= std::floor(x);  // torus wrap
    acc += s[i] * f(x);
  }
  return acc * h;
}

}  // namespace oracle
