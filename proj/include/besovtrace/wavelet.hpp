#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "besovtrace/common.hpp"

namespace besov {

/// Compactly supported orthogonal wavelet pair sampled on a dyadic grid.
///
/// Normalization: refinement Psi0(x) = 2 sum_k h_k Psi0(2x-k) with sum h = 1
/// (the L-infinity convention; no 2^{j/2} factor anywhere downstream).
/// Support of both Psi0 and Psi1 is [0, support_length], sampled at spacing
/// 2^{-grid_bits}, arrays of length support_length * 2^grid_bits + 1.
struct WaveletSystem {
  int moments = 0;        // vanishing-moment count N (filter length 2N)
  int grid_bits = 0;      // r: samples at spacing 2^-r
  int support_length = 0; // 2N - 1
  std::vector<double> filter;       // refinement mask h_0..h_{2N-1}
  std::vector<double> phi;          // Psi0 samples
  std::vector<double> psi;          // Psi1 samples
  std::vector<double> phi_deriv;    // empty when derivative unavailable
  std::vector<double> psi_deriv;
  bool deriv_from_cascade = false;  // else finite differences (or absent)
  double deriv_error_estimate = 0.0;
  double regularity_estimate = 0.0; // Holder exponent estimate, informational
  double refinement_residual = 0.0;
  double moment_residual = 0.0;     // max |int x^n psi| over n = 0..N-1
  double partition_residual = 0.0;  // max |sum_k phi(x-k) - 1| on [0,1)
  int cascade_iterations = 0;

  std::int64_t samples_per_unit() const { return std::int64_t(1) << grid_bits; }
  std::int64_t sample_count() const { return std::int64_t(support_length) * samples_per_unit() + 1; }

  /// Interpolated evaluation of Psi^l at u (l in {0,1}); zero off support.
  double eval(int l, double u) const;
  double eval_deriv(int l, double u) const;

  /// Torus evaluation at scale j: sum_m Psi^l(u + m 2^j), the periodized
  /// wavelet in the index convention where u = 2^j t - k.
  double eval_periodized(int l, double u, std::int64_t two_j) const;

  bool has_derivative() const { return !psi_deriv.empty(); }
};

/// The 1-periodic function G(t) = sum_k Psi1(t - k) on [0,1), sampled at
/// spacing 2^-grid_bits, together with its derivative and the tensor
/// dimension d' of the product version G_{d'}.
struct PeriodizedG {
  int grid_bits = 0;
  int d_prime = 1;
  int wavelet_moments = 0;  // 0 = injected samples (unknown provenance)
  std::vector<double> samples;
  std::vector<double> deriv;
  bool deriv_from_cascade = false;
  double deriv_error_estimate = 0.0;
  double periodicity_residual = 0.0;  // |G(0) from either end of support sum|
  double mean_residual = 0.0;         // |int_0^1 G| by the grid rule

  /// Univariate periodic evaluation by linear interpolation.
  double eval1(double t) const;
  double eval1_deriv(double t) const;
  /// Tensorized evaluation G_{d'}(t) = prod G(t_i); t.size() must equal d_prime.
  double eval(const std::vector<double>& t) const;

  static PeriodizedG from_samples(std::vector<double> samples, std::vector<double> deriv,
                                  int d_prime);
};

enum class HNVerdict { Holds, Fails, Inconclusive };

/// Numerical certificate for hypothesis (H_N): the zero set of G on [0,1)
/// is finite and the derivative is bounded away from zero on each zero
/// bracket. Never reports Holds when the grid cannot separate the zeros.
struct HNReport {
  HNVerdict verdict = HNVerdict::Inconclusive;
  int zero_count = 0;
  std::vector<std::pair<double, double>> zero_brackets;  // subintervals of [0,1)
  double min_derivative_at_zeros = 0.0;
  double derivative_floor = 0.0;
  double margin = 0.0;  // min_derivative_at_zeros - derivative_floor
  std::string note;

  std::string to_json() const;
};

/// Daubechies extremal-phase filter with N vanishing moments, length 2N,
/// normalized to sum h = 1 and sum_k h_k h_{k+2m} = [m=0]/2.
std::vector<double> generate_filter(int moments);

/// Orthonormality + unit-sum residual of a candidate refinement mask.
double filter_residual(const std::vector<double>& filter);

/// Run the cascade algorithm on the grid at spacing 2^-grid_bits and package
/// the sampled system. Throws ConvergenceError if the fixed-point residual
/// stalls above tolerance.
WaveletSystem cascade_evaluate(const std::vector<double>& filter, int grid_bits);

/// Periodize Psi1 (and its derivative) into G, tagged with tensor dimension d'.
PeriodizedG build_G(const WaveletSystem& system, int d_prime);

/// Certify hypothesis (H_N) on a periodized wavelet.
HNReport check_hypothesis_HN(const PeriodizedG& g, double derivative_floor = 1e-3);

/// Convenience: G_{d'}(t) with t given componentwise (wraps PeriodizedG::eval).
double eval_G_at(const PeriodizedG& g, const std::vector<double>& t);

// Versioned binary file io ("BWV1" magic).
void save_wavelet_system(const WaveletSystem& system, const std::string& path);
WaveletSystem load_wavelet_system(const std::string& path);

}  // namespace besov
