// besovtrace: wavelet-coefficient calculus for Besov fields, traces, probe
// families and pointwise-regularity experiments on the torus.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "besovtrace/experiments.hpp"

using namespace besov;

namespace {

ExperimentConfig make_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("BESOVTRACE_CONFIG")) path = env;
  }
  if (!path.empty()) cfg = load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("override must be key=value, got '" + kv + "'");
    }
    apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavelet trace/regularity toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config,-c", config_path, "key = value configuration file");
  app.add_option("--set", overrides, "override a config key (key=value)")->take_all();

  // wavelet generate | check-hn
  auto* wavelet = app.add_subcommand("wavelet", "generate filters and certify (H_N)");
  wavelet->require_subcommand(1);
  int w_moments = 8;
  int w_bits = 14;
  double hn_floor = 1e-3;
  std::string w_out, hn_out;
  auto* wgen = wavelet->add_subcommand("generate", "run the cascade and save the system");
  wgen->add_option("-N,--moments", w_moments, "vanishing moments");
  wgen->add_option("-r,--resolution", w_bits, "grid bits");
  wgen->add_option("-o,--output", w_out, "output .bwv path")->required();
  auto* whn = wavelet->add_subcommand("check-hn", "certify hypothesis (H_N)");
  whn->add_option("-N,--moments", w_moments, "vanishing moments");
  whn->add_option("-r,--resolution", w_bits, "grid bits");
  whn->add_option("--floor", hn_floor, "derivative floor");
  whn->add_option("-o,--output", hn_out, "JSON report path (default stdout)");

  // synthesize random | g | probes
  auto* synth = app.add_subcommand("synthesize", "construct coefficient fields");
  synth->require_subcommand(1);
  std::string sy_out;
  auto* sy_random = synth->add_subcommand("random", "Rademacher draw of the synthetic law");
  sy_random->add_option("-o,--output", sy_out, "output .bcf path")->required();
  auto* sy_g = synth->add_subcommand("g", "the explicit probe-base function g");
  sy_g->add_option("-o,--output", sy_out, "output .bcf path")->required();
  auto* sy_probes = synth->add_subcommand("probes", "the probe family g^(i)");
  std::string sy_dir;
  int sy_J0 = 1;
  sy_probes->add_option("-o,--output-dir", sy_dir, "output directory")->required();
  sy_probes->add_option("--J0", sy_J0, "subcube generation offset");

  // trace
  auto* tr = app.add_subcommand("trace", "trace a D-dimensional field at offset a");
  std::string tr_field, tr_wavelet, tr_out;
  std::vector<double> tr_a;
  tr->add_option("-f,--field", tr_field, "input .bcf field")->required();
  tr->add_option("-w,--wavelet", tr_wavelet, "input .bwv wavelet system")->required();
  tr->add_option("-a,--offset", tr_a, "offset a (d' entries)")->required();
  tr->add_option("-o,--output", tr_out, "output trace .btf path")->required();

  // holder
  auto* ho = app.add_subcommand("holder", "pointwise Holder estimate on a trace");
  std::string ho_trace, ho_out;
  std::vector<double> ho_x;
  double ho_width = 2.0;
  int ho_jlo = 1, ho_jhi = 0;
  ho->add_option("-t,--trace", ho_trace, "input .btf trace")->required();
  ho->add_option("-x,--point", ho_x, "point in [0,1)^d")->required();
  ho->add_option("-L,--width", ho_width, "cone width");
  ho->add_option("--j-lo", ho_jlo, "coarsest scale");
  ho->add_option("--j-hi", ho_jhi, "finest scale (default j_max)");
  ho->add_option("-o,--output", ho_out, "JSON output (default stdout)");

  // spectrum
  auto* sp = app.add_subcommand("spectrum", "coarse-grained singularity spectrum");
  std::string sp_trace, sp_csv, sp_json;
  double sp_hlo = 0.0, sp_hhi = 0.0, sp_step = 0.1, sp_rho = 0.0;
  int sp_jlo = 1, sp_jhi = 0;
  sp->add_option("-t,--trace", sp_trace, "input .btf trace")->required();
  sp->add_option("--h-lo", sp_hlo, "lowest h bin");
  sp->add_option("--h-hi", sp_hhi, "highest h bin");
  sp->add_option("--h-step", sp_step, "bin width");
  sp->add_option("--rho", sp_rho, "polylog correction exponent");
  sp->add_option("--j-lo", sp_jlo, "coarsest scale");
  sp->add_option("--j-hi", sp_jhi, "finest scale (default j_max)");
  sp->add_option("--csv", sp_csv, "CSV output path (header h,dhat)");
  sp->add_option("-o,--output", sp_json, "JSON output (default stdout)");

  // verify
  auto* ve = app.add_subcommand("verify", "run the quantitative experiments");
  ve->require_subcommand(1);
  std::string ve_out;
  ve->add_option("-o,--output", ve_out, "JSON report path (default stdout)");
  std::map<std::string, CLI::App*> verify_subs;
  for (const char* name :
       {"protr1", "trace-decay", "lower-bound", "volume-bound", "spectrum-line", "all"}) {
    verify_subs[name] = ve->add_subcommand(name, "");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = make_config(config_path, overrides);

    if (wgen->parsed()) {
      auto system = cascade_evaluate(generate_filter(w_moments), w_bits);
      save_wavelet_system(system, w_out);
      json j = {{"moments", system.moments},
                {"grid_bits", system.grid_bits},
                {"refinement_residual", system.refinement_residual},
                {"moment_residual", system.moment_residual},
                {"partition_residual", system.partition_residual},
                {"regularity_estimate", system.regularity_estimate},
                {"cascade_iterations", system.cascade_iterations}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (whn->parsed()) {
      auto system = cascade_evaluate(generate_filter(w_moments), w_bits);
      auto rep = check_hypothesis_HN(build_G(system, cfg.D - cfg.d), hn_floor);
      write_text(hn_out, rep.to_json());
      return rep.verdict == HNVerdict::Holds ? 0 : 1;
    }
    if (sy_random->parsed()) {
      cfg.validate();
      const BesovParams params{cfg.s, cfg.p, cfg.q, cfg.D};
      save_field(synthesize_random_field(params, cfg.j_max, cfg.seed), sy_out);
      return 0;
    }
    if (sy_g->parsed()) {
      cfg.validate();
      const BesovParams params{cfg.s, cfg.p, cfg.q, cfg.D};
      save_field(synthesize_g(params, cfg.d, cfg.j_max), sy_out);
      return 0;
    }
    if (sy_probes->parsed()) {
      cfg.validate();
      const BesovParams params{cfg.s, cfg.p, cfg.q, cfg.D};
      save_probe_family(build_probe_family(params, cfg.d, sy_J0, cfg.j_max), sy_dir);
      return 0;
    }
    if (tr->parsed()) {
      const auto field = load_field(tr_field);
      const auto system = load_wavelet_system(tr_wavelet);
      const int d = field.dim() - static_cast<int>(tr_a.size());
      save_trace_field(trace(field, system, tr_a, d), tr_out);
      return 0;
    }
    if (ho->parsed()) {
      const auto tf = load_trace_field(ho_trace);
      const int hi = ho_jhi > 0 ? ho_jhi : tf.max_scale();
      const auto est = estimate_holder(tf, ho_x, ho_width, ho_jlo, hi);
      write_text(ho_out, est.to_json() + "\n");
      return 0;
    }
    if (sp->parsed()) {
      const auto tf = load_trace_field(sp_trace);
      const int hi = sp_jhi > 0 ? sp_jhi : tf.max_scale();
      if (sp_hhi <= sp_hlo) {
        sp_hlo = cfg.s - cfg.d / cfg.p - 0.3;
        sp_hhi = cfg.s + 0.25;
      }
      std::vector<double> grid;
      for (double h = sp_hlo; h <= sp_hhi + 1e-9; h += sp_step) grid.push_back(h);
      SpectrumOptions opts;
      opts.polylog_correction = sp_rho;
      const auto spec = estimate_spectrum(tf, sp_jlo, hi, grid, opts);
      if (!sp_csv.empty()) write_text(sp_csv, spec.to_csv());
      write_text(sp_json, spec.to_json() + "\n");
      return 0;
    }
    if (ve->parsed()) {
      cfg.validate();
      const std::string which = ve->get_subcommands().front()->get_name();
      json report;
      if (which == "all") {
        report = run_all(cfg);
      } else {
        const Workbench wb = Workbench::build(cfg);
        ExperimentResult r;
        if (which == "protr1") {
          r = exp_protr1(cfg, wb);
        } else if (which == "trace-decay") {
          r = exp_trace_decay(cfg, wb);
        } else if (which == "lower-bound") {
          r = exp_lower_bound(cfg, wb);
        } else if (which == "volume-bound") {
          r = exp_volume_bound(cfg, wb);
        } else {
          r = exp_spectrum_line(cfg, wb);
        }
        report["schema_version"] = 1;
        report["config"] = cfg.to_json();
        report["results"][r.name] = {{"pass", r.pass}, {"values", r.values}};
        report["pass"] = r.pass;
        report["meta"] = {{"durations_ms", {{r.name, r.duration_ms}}}};
      }
      write_text(ve_out, report.dump(2) + "\n");
      return report["pass"].get<bool>() ? 0 : 1;
    }
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
