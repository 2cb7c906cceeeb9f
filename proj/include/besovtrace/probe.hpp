#pragma once

#include <string>
#include <vector>

#include "besovtrace/field.hpp"
#include "besovtrace/trace.hpp"
#include "besovtrace/wavelet.hpp"

namespace besov {

/// The exponent H(alpha) = s - d/p + d/(alpha p) attached to points that are
/// alpha-approximable by dyadics.
struct HAlpha {
  double alpha = 1.0;
  double value = 0.0;

  HAlpha() = default;
  HAlpha(double alpha_, double s, int d, double p);
};

double h_alpha(double alpha, double s, int d, double p);

/// Lazy coefficient source for the explicit function g and for the probe
/// family members g^(i).
///
/// Base g: e_lambda = j^{-(q+2)/(qp)} 2^{(d/p - s) j} 2^{-(d/p) J} when the
/// first-d type bits are nonzero and the trailing d' bits are all ones, with
/// (J, K) the irreducible form of the first-d position; zero otherwise. The
/// all-zero position has no irreducible form and carries coefficient zero.
///
/// Probe i: coefficients of g at scale j - J0 redistributed to the i-th
/// subcube at scale j (offset enumeration lexicographic), types carried over.
class ProbeField : public CoefficientSource {
 public:
  // probe_index = -1 builds the base g (J0 ignored in that case, pass 0)
  ProbeField(BesovParams params, int d, int j_max, int J0 = 0, int probe_index = -1);

  int dim() const override { return params_.dim; }
  int max_scale() const override { return j_max_; }
  double coeff(const CoeffIndex& idx) const override;
  double scale_power_sum(int j, double p) const override;

  /// e at (j, k_d) for the admissible types; zero when this (j, k_d) does not
  /// belong to this member's support.
  double value_at(int j, const std::vector<std::int64_t>& k_d) const;

  int d() const { return d_; }
  int J0() const { return J0_; }
  int probe_index() const { return probe_index_; }
  const BesovParams& params() const { return params_; }
  double polylog_exponent() const;  // (q+2)/(qp), 1/p when q = inf

 private:
  double base_value(int j_tilde, const std::vector<std::int64_t>& k_tilde) const;
  BesovParams params_;
  int d_ = 1;
  int d_prime_ = 1;
  int j_max_ = 0;
  int J0_ = 0;
  int probe_index_ = -1;
};

/// Lexicographic subcube index of k at scale j relative to its scale-(j-J0)
/// parent: the offset vector read with coordinate 0 most significant.
std::uint64_t subcube_index(const std::vector<std::int64_t>& k, int J0);
/// Position of the i-th scale-(j+J0) subcube of the cube (j, k).
std::vector<std::int64_t> subcube_position(const std::vector<std::int64_t>& k, int J0,
                                           std::uint64_t i);

/// Probe family g^(1..d1), d1 = 2^{d J0}, together with the base g.
struct ProbeFamily {
  int J0 = 1;
  std::uint64_t d1 = 2;
  int d = 1;
  int j_max = 0;
  BesovParams params;  // dim = D
  ProbeField base;
  std::vector<ProbeField> probes;

  std::string manifest_json() const;
};

/// Smallest J0 >= 1 with d - 2^{d J0} (gamma - H) < 0.
int choose_J0(int d, double gamma, double h_alpha_value);

ProbeFamily build_probe_family(const BesovParams& params, int d, int J0, int j_max);

/// Materialized base g (desk scale only; guarded against absurd sizes).
CoeffField synthesize_g(const BesovParams& params, int d, int j_max);
CoeffField materialize_probe(const ProbeField& probe);

/// Closed-form trace coefficient e^(i)_lambda(a) = e^(i) * G_{d'}(2^j a) for
/// wavelet-band lambda = (j, k_d, l) with l != 0. member = -1 addresses g.
double probe_trace_closed_form(const ProbeFamily& family, int member, int j,
                               const std::vector<std::int64_t>& k_d, const PeriodizedG& G,
                               const std::vector<double>& a);

/// Wavelet-band trace field of sum_i beta_i g^(i) at offset a via the closed
/// form (the scaling band of probe traces vanishes identically).
TraceField probe_family_trace(const ProbeFamily& family, const std::vector<double>& betas,
                              const PeriodizedG& G, const std::vector<double>& a);

/// Witness (J_n, K_n) of a point approximable at rate alpha.
struct Witness {
  int J = 0;
  std::vector<std::int64_t> K;
};

struct LowerBoundEntry {
  int n = 0;
  int J_n = 0;
  int j_n = 0;
  int probe = 0;
  bool cone_ok = false;
  double coeff_abs = 0.0;
  double ratio = 0.0;  // coeff_abs / (j_n^{-(2d'+(q+2)/(qp))} 2^{-H(alpha) j_n})
};

struct LowerBoundReport {
  std::vector<LowerBoundEntry> entries;
  double c_empirical = 0.0;  // min ratio over all (n, i)
  bool all_cones_ok = false;
  double cone_width = 0.0;   // 2^{J0+2}
};

/// Checks, for each witness scale j_n = floor(alpha J_n) in [max(j_a,1),
/// j_max - J0] and each probe i: (1) the subcube lies in the width-2^{J0+2}
/// cone above x, and (2) the trace coefficient magnitude against the
/// H(alpha)-rate, reporting the empirical constant.
LowerBoundReport verify_lower_bound(const ProbeFamily& family, const PeriodizedG& G,
                                    const std::vector<double>& a, const std::vector<double>& x,
                                    double alpha, const std::vector<Witness>& witnesses,
                                    int j_a);

void save_probe_family(const ProbeFamily& family, const std::string& directory);

}  // namespace besov
