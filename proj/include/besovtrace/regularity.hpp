#pragma once

#include <optional>
#include <string>
#include <vector>

#include "besovtrace/probe.hpp"
#include "besovtrace/trace.hpp"

namespace besov {

/// Per-scale cone-of-influence maxima above a point.
struct ConeLeaders {
  std::vector<double> x;
  double width = 2.0;  // L
  int j_lo = 1;
  int j_hi = 0;
  std::vector<double> M;       // M[j], indices j_lo..j_hi populated
  std::vector<char> empty_at;  // no stored entry met the cone at this scale
};

struct HolderOptions {
  int exclude_coarsest = 2;
  int exclude_finest = 2;
  int min_usable = 5;
  double h_cap = 20.0;
  double polylog_correction = 0.0;  // regress log2 M_j + rho log2 j when > 0
};

struct HolderEstimate {
  double h_hat = 0.0;
  bool capped = false;  // all leaders below the 2^{-h_cap j} floor
  int window_lo = 0;
  int window_hi = 0;
  double r2 = 0.0;
  double residual = 0.0;
  std::string method;

  std::string to_json() const;
};

/// Witnesses (J_n, K_n) of dyadic approximability at rate alpha.
struct DyadicWitness {
  std::vector<double> x;
  double alpha = 1.0;
  bool accepted = false;
  bool dyadic_flagged = false;  // x dyadic at depth <= j_max: alpha = inf case
  int hits_required = 0;
  std::vector<Witness> witnesses;
  std::vector<double> distances;  // |x - K 2^-J| per witness
  std::vector<double> rates;      // -log2 dist / J

  std::string to_json() const;
};

struct A1Result {
  bool accepted = false;
  int j_a = 0;
  int j_lo = 0;
  int j_hi = 0;
  std::vector<double> margins;  // |G_{d'}(2^j a)| - j^{-2d'} for j in [j_lo, j_hi]
};

struct SpectrumOptions {
  double width = 2.0;      // cone half-width L in units of 2^-j
  int leader_depth = 3;    // max over scales j..j+depth within the cone
  int fit_scales = 5;      // linear fit over the largest usable scales
  std::uint64_t min_count = 4;  // bins need this many hits per fitted scale
  double polylog_correction = 0.0;  // rho: h = (-log2 l - rho log2 j)/j
  // Estimate the scale-constant offset b in -log2 l = h j + b from the
  // per-scale medians and remove it before binning. Pins the saturated bulk
  // at its fitted exponent instead of letting it migrate across bins.
  bool register_intercept = false;
  // Extra constant added to the fitted intercept before binning; calibrates
  // the anchor class offset (e.g. a probe family's subcube-generation shift).
  double register_shift = 0.0;
};

struct SpectrumBin {
  double h = 0.0;
  bool has_estimate = false;
  double dhat = 0.0;       // clamped to [., d]
  double raw_slope = 0.0;
  double residual = 0.0;
  double mass_finest = 0.0;  // count fraction at the finest fitted scale
};

struct SpectrumEstimate {
  std::vector<SpectrumBin> bins;
  int j_lo = 0;
  int j_hi = 0;
  int dim = 1;
  double below_range_mass = 0.0;  // at the finest fitted scale
  double above_range_mass = 0.0;

  std::optional<double> dhat_at(double h) const;
  std::string to_csv() const;  // header "h,dhat"
  std::string to_json() const;
};

ConeLeaders cone_leaders(const TraceField& tf, const std::vector<double>& x, double width,
                         int j_lo, int j_hi);

/// Pointwise Holder exponent from the cone-leader decay: least-squares slope
/// of log2 M_j against -j over the trimmed window.
HolderEstimate estimate_holder(const TraceField& tf, const std::vector<double>& x, double width,
                               int j_lo, int j_hi, const HolderOptions& opts = {});

/// Scan for dyadic approximations |x - k 2^-j| <= 2^{-alpha j}, reduced to
/// irreducible form. Acceptance uses the hit-count proxy, capped by the
/// maximal witness-chain length reachable at rate alpha below j_max.
DyadicWitness classify_dyadic(const std::vector<double>& x, double alpha, int j_max);

/// Length of the maximal witness chain J_{n+1} = max(J_n+1, ceil(alpha J_n)+1)
/// below j_max (how many distinct witness depths rate alpha admits at all).
int witness_chain_length(double alpha, int j_max);

/// A constructed point of X^alpha: bits set along the chain
/// J_{n+1} = max(J_n + 1, ceil(rate_boost * alpha * J_n) + 1), with the
/// witnesses truncated at j_max. rate_boost > 1 overshoots the approximation
/// rate so each witness covers a run of hit scales.
std::pair<double, std::vector<Witness>> lacunary_alpha_point(double alpha, int j_max,
                                                             double rate_boost = 2.0);

/// Membership test for A_1: smallest j_a with |G_{d'}(2^j a)| > j^{-2d'} for
/// all j in [j_a, j_hi].
A1Result a1_membership(const PeriodizedG& G, const std::vector<double>& a, int j_lo, int j_hi);

/// The A_{gamma,N} coefficient test on the wavelet band of a trace:
/// |d_lambda(a)| <= N 2^{-gamma j} (1 + |2^j x - k|)^gamma for every stored
/// coefficient up to j_max.
bool holder_candidate_test(const TraceField& tf, double gamma, double n_const,
                           const std::vector<double>& x, int j_max);

/// Coarse-grained singularity-spectrum estimator on cone leaders.
SpectrumEstimate estimate_spectrum(const TraceField& tf, int j_lo, int j_hi,
                                   const std::vector<double>& h_grid,
                                   const SpectrumOptions& opts = {});

/// Synthetic monofractal cone field: d_lambda = 2^{-h0 j} on the width-`width`
/// cone above x, zero elsewhere (wavelet band only).
TraceField synthetic_cone_field(const std::vector<double>& x, double h0, int j_max,
                                double width = 1.0);

/// Synthetic monofractal field: d_lambda = 2^{-h0 j} at every position.
TraceField synthetic_monofractal_field(int d, double h0, int j_max);

}  // namespace besov
