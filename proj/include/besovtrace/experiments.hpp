#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "besovtrace/probe.hpp"
#include "besovtrace/regularity.hpp"

namespace besov {

using json = nlohmann::ordered_json;

/// Everything the experiments need, with the acceptance thresholds visible in
/// one place. Defaults are the calibrated desk-scale configuration.
struct ExperimentConfig {
  // wavelet
  int moments = 8;
  int grid_bits = 14;
  // space parameters
  int D = 2;
  int d = 1;
  double s = 2.0;
  double p = 2.0;
  double q = 2.0;
  int j_max = 14;
  std::uint64_t seed = 20250809;
  std::string output_dir;  // empty: no CSV/JSON side files

  // protr1 measure decay
  int protr1_samples = 100000;
  int protr1_j_lo = 6;
  int protr1_j_hi = 14;
  double protr1_min_exponent = 1.8;

  // Appendix-A trace decay
  double eps = 0.2;
  int decay_a_bits = 12;  // 2^bits offsets in the a-grid
  int decay_j_lo = 6;
  int decay_j_hi = 12;
  double markov_slack = 4.0;
  double decay_min_exponent = 0.3;  // eps*p - 0.1 at the default (eps, p)

  // lower bound (lemtr2 / eq312)
  int lb_triples = 20;
  std::vector<int> lb_jmaxes{10, 12, 14};
  double lb_stability_factor = 2.0;
  std::vector<double> lb_alphas{1.25, 1.5, 2.0, 3.0};
  int lb_J0 = 2;

  // volume bound (BaaNf at finite scale)
  double vb_alpha = 1.5;
  std::vector<double> vb_gamma_gaps{0.3, 0.6};
  std::vector<int> vb_j0_list{4, 5, 6, 7, 8};
  int vb_x_grid = 17;
  double vb_n_const = 1.0;
  double vb_exponent_slack = 0.1;
  double vb_doubling_tol = 0.25;
  double vb_a = 0.375;  // dyadic: the G-orbit is eventually constant

  // spectrum line
  int sp_J0 = 1;
  int sp_j_lo = 4;
  int sp_j_hi = 14;
  double sp_h_step = 0.125;
  double sp_interior_margin = 0.1;
  double sp_dev_tol = 0.15;
  double sp_upper_slack = 0.1;
  double sp_mass_tol = 0.01;
  double sp_slope_tol = 0.10;
  int sp_fit_scales = 12;
  int sp_leader_depth = 3;
  // norm of the random component of the proxy: small enough that its
  // saturated bulk (coarse exponents s + O(1/j) at desk scale) stays above
  // the estimation window; the estimator is scale invariant per bin
  double sp_random_scale = 0.0078125;
  std::vector<double> sp_a_candidates{0.375, 1.0 / 3.0, 0.203125, 2.0 / 5.0, 3.0 / 7.0};

  // holder calibration
  std::vector<double> hc_exponents{0.5, 1.0, 1.5, 2.5};
  double hc_tol = 0.05;
  std::vector<double> alpha_grid{1.0, 1.25, 1.5, 2.0, 3.0, 4.0};
  double halpha_tol = 0.1;

  void validate() const;
  json to_json() const;
};

/// `key = value` lines, '#' comments; lists comma-separated; q accepts "inf".
ExperimentConfig load_config(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ExperimentResult {
  std::string name;
  bool pass = false;
  json values;  // measured values, fits with residuals, thresholds
  double duration_ms = 0.0;
};

/// Shared numerical context (wavelet system and periodized G), built once.
struct Workbench {
  WaveletSystem system;
  PeriodizedG G;

  static Workbench build(const ExperimentConfig& cfg);
};

ExperimentResult exp_protr1(const ExperimentConfig& cfg, const Workbench& wb);
ExperimentResult exp_trace_decay(const ExperimentConfig& cfg, const Workbench& wb);
ExperimentResult exp_lower_bound(const ExperimentConfig& cfg, const Workbench& wb);
ExperimentResult exp_volume_bound(const ExperimentConfig& cfg, const Workbench& wb);
ExperimentResult exp_spectrum_line(const ExperimentConfig& cfg, const Workbench& wb);
ExperimentResult exp_holder_calibration(const ExperimentConfig& cfg, const Workbench& wb);

/// Runs every experiment, writes CSV side files into cfg.output_dir when set,
/// and returns the aggregate report. Timing lives only under "meta".
json run_all(const ExperimentConfig& cfg);

/// Composite "prevalent proxy" trace: random saturating field plus the probe
/// family with the given betas, traced at offset a.
TraceField prevalent_proxy_trace(const ExperimentConfig& cfg, const Workbench& wb,
                                 const ProbeFamily& family, const std::vector<double>& betas,
                                 const std::vector<double>& a);

/// First offset in the candidate list passing the A_1 membership test.
std::vector<double> pick_a1_offset(const ExperimentConfig& cfg, const PeriodizedG& G);

}  // namespace besov
