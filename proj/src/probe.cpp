#include "besovtrace/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace besov {

HAlpha::HAlpha(double alpha_, double s, int d, double p) : alpha(alpha_) {
  value = h_alpha(alpha_, s, d, p);
}

double h_alpha(double alpha, double s, int d, double p) {
  if (alpha < 1.0) throw ParameterError("h_alpha: alpha must be >= 1");
  return s - d / p + d / (alpha * p);
}

ProbeField::ProbeField(BesovParams params, int d, int j_max, int J0, int probe_index)
    : params_(params), d_(d), j_max_(j_max), J0_(J0), probe_index_(probe_index) {
  if (d < 1 || d >= params_.dim) throw ParameterError("ProbeField: requires 1 <= d < D");
  if (params_.s - params_.dim / params_.p <= 0) {
    throw ParameterError("ProbeField: requires s - D/p > 0");
  }
  d_prime_ = params_.dim - d;
  if (probe_index_ >= 0) {
    if (J0_ < 1) throw ParameterError("ProbeField: probe members need J0 >= 1");
    if (j_max_ <= J0_) throw ParameterError("ProbeField: j_max must exceed J0");
    if (static_cast<std::uint64_t>(probe_index_) >= (std::uint64_t(1) << (d_ * J0_))) {
      throw ParameterError("ProbeField: probe index out of range");
    }
  } else {
    J0_ = 0;
  }
}

double ProbeField::polylog_exponent() const {
  return params_.q_is_inf() ? 1.0 / params_.p : (params_.q + 2.0) / (params_.q * params_.p);
}

double ProbeField::base_value(int j_tilde, const std::vector<std::int64_t>& k_tilde) const {
  // irreducible depth without materializing K (hot path)
  int shift = 64;
  bool all_zero = true;
  for (std::int64_t ki : k_tilde) {
    if (ki != 0) {
      all_zero = false;
      shift = std::min(shift, std::countr_zero(static_cast<std::uint64_t>(ki)));
    }
  }
  if (all_zero) return 0.0;  // no irreducible form at the zero position
  const int J = j_tilde - std::min(shift, j_tilde);
  const double dp = static_cast<double>(d_) / params_.p;
  return std::pow(static_cast<double>(j_tilde), -polylog_exponent()) *
         std::exp2((dp - params_.s) * j_tilde) * std::exp2(-dp * J);
}

double ProbeField::value_at(int j, const std::vector<std::int64_t>& k_d) const {
  if (j < 1 || j > j_max_) return 0.0;
  if (probe_index_ < 0) return base_value(j, k_d);
  if (j <= J0_) return 0.0;
  if (subcube_index(k_d, J0_) != static_cast<std::uint64_t>(probe_index_)) return 0.0;
  std::vector<std::int64_t> parent(k_d.size());
  for (size_t i = 0; i < k_d.size(); ++i) parent[i] = k_d[i] >> J0_;
  return base_value(j - J0_, parent);
}

double ProbeField::coeff(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) return 0.0;
  if (idx.dim() != params_.dim) return 0.0;
  const unsigned l_d = idx.l & ((1u << d_) - 1);
  const unsigned l_p = idx.l >> d_;
  const unsigned ones = (1u << d_prime_) - 1;
  if (l_d == 0 || l_p != ones) return 0.0;
  std::vector<std::int64_t> k_d(idx.k.begin(), idx.k.begin() + d_);
  return value_at(idx.j, k_d);
}

double ProbeField::scale_power_sum(int j, double p) const {
  if (j < 1 || j > j_max_) return 0.0;
  const int j_tilde = probe_index_ < 0 ? j : j - J0_;
  if (j_tilde < 1) return 0.0;
  // sum over k_d via the irreducible-depth histogram: depth J occurs
  // 2^{dJ} - 2^{d(J-1)} times (J >= 1); the zero position carries no value.
  const double dp = static_cast<double>(d_) / params_.p;
  const double amp = std::pow(static_cast<double>(j_tilde), -polylog_exponent()) *
                     std::exp2((dp - params_.s) * j_tilde);
  double sum_kd = 0;
  for (int J = 1; J <= j_tilde; ++J) {
    const double count = std::exp2(static_cast<double>(d_) * J) -
                         std::exp2(static_cast<double>(d_) * (J - 1));
    sum_kd += count * std::pow(amp * std::exp2(-dp * J), p);
  }
  // types: (2^d - 1) choices of l_d, one l'; positions k' are free
  const double type_count = std::exp2(static_cast<double>(d_)) - 1.0;
  const double kp_count = std::exp2(static_cast<double>(d_prime_) * j);
  return type_count * kp_count * sum_kd;
}

std::uint64_t subcube_index(const std::vector<std::int64_t>& k, int J0) {
  std::uint64_t idx = 0;
  const std::int64_t mask = (std::int64_t(1) << J0) - 1;
  for (std::int64_t ki : k) idx = (idx << J0) | static_cast<std::uint64_t>(ki & mask);
  return idx;
}

std::vector<std::int64_t> subcube_position(const std::vector<std::int64_t>& k, int J0,
                                           std::uint64_t i) {
  const int d = static_cast<int>(k.size());
  std::vector<std::int64_t> out(d);
  for (int c = d - 1; c >= 0; --c) {
    const std::uint64_t offset = i & ((std::uint64_t(1) << J0) - 1);
    out[c] = (k[c] << J0) | static_cast<std::int64_t>(offset);
    i >>= J0;
  }
  return out;
}

int choose_J0(int d, double gamma, double h_alpha_value) {
  const double gap = gamma - h_alpha_value;
  if (gap <= 0) throw ParameterError("choose_J0: requires gamma > H(alpha)");
  for (int J0 = 1; J0 <= 40 / d; ++J0) {
    const double d1 = std::exp2(static_cast<double>(d) * J0);
    if (static_cast<double>(d) - d1 * gap < 0) return J0;
  }
  throw ParameterError("choose_J0: no feasible J0 up to the size guard");
}

ProbeFamily build_probe_family(const BesovParams& params, int d, int J0, int j_max) {
  if (J0 < 1) throw ParameterError("build_probe_family: J0 must be >= 1");
  if (j_max <= J0) throw ParameterError("build_probe_family: j_max must exceed J0");
  ProbeFamily fam{J0,
                  std::uint64_t(1) << (d * J0),
                  d,
                  j_max,
                  params,
                  ProbeField(params, d, j_max, 0, -1),
                  {}};
  fam.probes.reserve(fam.d1);
  for (std::uint64_t i = 0; i < fam.d1; ++i) {
    fam.probes.emplace_back(params, d, j_max, J0, static_cast<int>(i));
  }
  return fam;
}

namespace {

CoeffField materialize(const ProbeField& src, const char* what) {
  const BesovParams& params = src.params();
  const int D = params.dim;
  const double entries = std::exp2(static_cast<double>(D) * (src.max_scale() + 1));
  if (entries > std::exp2(25)) {
    throw ParameterError(std::string(what) + ": too large to materialize");
  }
  CoeffField out(D, src.max_scale(), params);
  CoeffIndex idx;
  idx.k.resize(D);
  const int d = src.d();
  const unsigned ones_p = ((1u << (D - d)) - 1) << d;
  for (int j = 1; j <= src.max_scale(); ++j) {
    idx.j = j;
    const std::uint64_t kd_count = std::uint64_t(1) << (d * j);
    const std::uint64_t kp_count = std::uint64_t(1) << ((D - d) * j);
    for (std::uint64_t kd = 0; kd < kd_count; ++kd) {
      const auto k_d = decode_position(kd, j, d);
      const double v = src.value_at(j, k_d);
      if (v == 0.0) continue;
      for (int i = 0; i < d; ++i) idx.k[i] = k_d[i];
      for (unsigned l_d = 1; l_d < (1u << d); ++l_d) {
        idx.l = l_d | ones_p;
        for (std::uint64_t kp = 0; kp < kp_count; ++kp) {
          const auto k_p = decode_position(kp, j, D - d);
          for (int i = 0; i < D - d; ++i) idx.k[d + i] = k_p[i];
          out.set(idx, v);
        }
      }
    }
  }
  return out;
}

}  // namespace

CoeffField synthesize_g(const BesovParams& params, int d, int j_max) {
  ProbeField g(params, d, j_max, 0, -1);
  return materialize(g, "synthesize_g");
}

CoeffField materialize_probe(const ProbeField& probe) { return materialize(probe, "probe"); }

double probe_trace_closed_form(const ProbeFamily& family, int member, int j,
                               const std::vector<std::int64_t>& k_d, const PeriodizedG& G,
                               const std::vector<double>& a) {
  const ProbeField& src = member < 0 ? family.base : family.probes.at(member);
  const double e = src.value_at(j, k_d);
  if (e == 0.0) return 0.0;
  double gval = 1.0;
  for (double ai : a) gval *= G.eval1(std::ldexp(frac(ai), j));
  return e * gval;
}

TraceField probe_family_trace(const ProbeFamily& family, const std::vector<double>& betas,
                              const PeriodizedG& G, const std::vector<double>& a) {
  if (betas.size() != family.d1) {
    throw ParameterError("probe_family_trace: betas size must be d1");
  }
  TraceField tf(family.d, family.j_max, a);
  CoeffIndex idx;
  idx.k.resize(family.d);
  for (int j = family.J0 + 1; j <= family.j_max; ++j) {
    idx.j = j;
    double gval = 1.0;
    for (double ai : a) gval *= G.eval1(std::ldexp(frac(ai), j));
    if (gval == 0.0) continue;
    const std::uint64_t kd_count = std::uint64_t(1) << (family.d * j);
    for (std::uint64_t kd = 0; kd < kd_count; ++kd) {
      const auto k_d = decode_position(kd, j, family.d);
      const std::uint64_t i = subcube_index(k_d, family.J0);
      const double e = family.probes[i].value_at(j, k_d);
      if (e == 0.0) continue;
      const double v = betas[i] * e * gval;
      if (v == 0.0) continue;
      idx.k = k_d;
      for (unsigned l = 1; l < (1u << family.d); ++l) {
        idx.l = l;
        tf.set(idx, v);
      }
    }
  }
  return tf;
}

std::string ProbeFamily::manifest_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\n  \"J0\": " << J0 << ",\n  \"d1\": " << d1 << ",\n  \"d\": " << d
     << ",\n  \"j_max\": " << j_max << ",\n  \"enumeration\": \"lexicographic-offset\""
     << ",\n  \"params\": {\"s\": " << params.s << ", \"p\": " << params.p << ", \"q\": ";
  if (params.q_is_inf()) {
    os << "\"inf\"";
  } else {
    os << params.q;
  }
  os << ", \"dim\": " << params.dim << "}\n}\n";
  return os.str();
}

LowerBoundReport verify_lower_bound(const ProbeFamily& family, const PeriodizedG& G,
                                    const std::vector<double>& a, const std::vector<double>& x,
                                    double alpha, const std::vector<Witness>& witnesses,
                                    int j_a) {
  if (alpha < 1.0) throw ParameterError("verify_lower_bound: alpha must be >= 1");
  if (static_cast<int>(x.size()) != family.d) {
    throw ParameterError("verify_lower_bound: x dimension mismatch");
  }
  LowerBoundReport rep;
  rep.cone_width = std::exp2(family.J0 + 2);
  rep.all_cones_ok = true;
  const int d_prime = family.params.dim - family.d;
  const double polylog = family.base.polylog_exponent();
  const double H = h_alpha(alpha, family.params.s, family.d, family.params.p);
  double cmin = 1e300;
  int n = 0;
  for (const auto& wit : witnesses) {
    const int j_n = static_cast<int>(std::floor(alpha * wit.J));
    ++n;
    if (j_n < std::max(1, j_a) || j_n + family.J0 > family.j_max || j_n < wit.J) continue;
    std::vector<std::int64_t> k_n(wit.K.size());
    for (size_t c = 0; c < wit.K.size(); ++c) k_n[c] = wit.K[c] << (j_n - wit.J);
    const int j_sub = j_n + family.J0;
    double gval = 1.0;
    for (double ai : a) gval *= G.eval1(std::ldexp(frac(ai), j_sub));
    for (std::uint64_t i = 0; i < family.d1; ++i) {
      LowerBoundEntry entry;
      entry.n = n;
      entry.J_n = wit.J;
      entry.j_n = j_n;
      entry.probe = static_cast<int>(i);
      const auto k_sub = subcube_position(k_n, family.J0, i);
      bool cone = true;
      const double width = rep.cone_width * std::ldexp(1.0, -j_sub);
      for (int c = 0; c < family.d; ++c) {
        const double pos = std::ldexp(static_cast<double>(k_sub[c]), -j_sub);
        if (torus_dist(frac(x[c]), pos) > width) cone = false;
      }
      entry.cone_ok = cone;
      if (!cone) rep.all_cones_ok = false;
      const double e = family.probes[i].value_at(j_sub, k_sub);
      entry.coeff_abs = std::fabs(e * gval);
      const double target = std::pow(static_cast<double>(j_n), -(2.0 * d_prime + polylog)) *
                            std::exp2(-H * j_n);
      entry.ratio = entry.coeff_abs / target;
      cmin = std::min(cmin, entry.ratio);
      rep.entries.push_back(entry);
    }
  }
  if (rep.entries.empty()) {
    throw InsufficientScaleError(
        "verify_lower_bound: no witness scale in [max(j_a,1), j_max - J0]");
  }
  rep.c_empirical = cmin;
  return rep;
}

void save_probe_family(const ProbeFamily& family, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  {
    std::ofstream os(fs::path(directory) / "manifest.json");
    if (!os) throw IoError("cannot write probe manifest");
    os << family.manifest_json();
  }
  save_field(materialize(family.base, "save_probe_family"),
             (fs::path(directory) / "g.bcf").string());
  for (std::uint64_t i = 0; i < family.d1; ++i) {
    save_field(materialize(family.probes[i], "save_probe_family"),
               (fs::path(directory) / ("g_" + std::to_string(i + 1) + ".bcf")).string());
  }
}

}  // namespace besov
