#include "besovtrace/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace besov {

namespace {

// positions k in Z_j^d with |x - k 2^-j|_inf <= width 2^-j (torus metric)
std::vector<std::vector<std::int64_t>> cone_positions(const std::vector<double>& x, int j,
                                                      double width) {
  const int d = static_cast<int>(x.size());
  const std::int64_t two_j = std::int64_t(1) << j;
  const auto r = static_cast<std::int64_t>(std::floor(width)) + 1;
  std::vector<std::vector<std::int64_t>> per_coord(d);
  for (int i = 0; i < d; ++i) {
    const auto center = static_cast<std::int64_t>(std::llround(std::ldexp(frac(x[i]), j)));
    for (std::int64_t off = -r; off <= r; ++off) {
      std::int64_t k = (center + off) % two_j;
      if (k < 0) k += two_j;
      const double dist = torus_dist(frac(x[i]), std::ldexp(static_cast<double>(k), -j));
      if (dist <= width * std::ldexp(1.0, -j) * (1 + 1e-12)) per_coord[i].push_back(k);
    }
    std::sort(per_coord[i].begin(), per_coord[i].end());
    per_coord[i].erase(std::unique(per_coord[i].begin(), per_coord[i].end()),
                       per_coord[i].end());
    if (per_coord[i].empty()) return {};
  }
  std::vector<std::vector<std::int64_t>> out;
  std::uint64_t combos = 1;
  for (int i = 0; i < d; ++i) combos *= per_coord[i].size();
  out.reserve(combos);
  for (std::uint64_t t = 0; t < combos; ++t) {
    std::uint64_t rem = t;
    std::vector<std::int64_t> k(d);
    for (int i = 0; i < d; ++i) {
      k[i] = per_coord[i][rem % per_coord[i].size()];
      rem /= per_coord[i].size();
    }
    out.push_back(std::move(k));
  }
  return out;
}

double max_abs_at(const TraceField& tf, int j, const std::vector<std::int64_t>& k) {
  double m = 0;
  CoeffIndex idx;
  idx.j = j;
  idx.k = k;
  for (unsigned l = 0; l < (1u << tf.dim()); ++l) {
    idx.l = l;
    m = std::max(m, std::fabs(tf.coeff(idx)));
  }
  return m;
}

}  // namespace

ConeLeaders cone_leaders(const TraceField& tf, const std::vector<double>& x, double width,
                         int j_lo, int j_hi) {
  if (width < 1.0) throw ParameterError("cone_leaders: width must be >= 1");
  if (static_cast<int>(x.size()) != tf.dim()) {
    throw ParameterError("cone_leaders: point dimension mismatch");
  }
  j_lo = std::max(1, j_lo);
  j_hi = std::min(tf.max_scale(), j_hi);
  ConeLeaders out;
  out.x = x;
  out.width = width;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  out.M.assign(std::max(0, j_hi + 1), 0.0);
  out.empty_at.assign(std::max(0, j_hi + 1), 0);
  for (int j = j_lo; j <= j_hi; ++j) {
    double m = 0;
    for (const auto& k : cone_positions(x, j, width)) m = std::max(m, max_abs_at(tf, j, k));
    out.M[j] = m;
    out.empty_at[j] = m == 0.0;
  }
  return out;
}

HolderEstimate estimate_holder(const TraceField& tf, const std::vector<double>& x, double width,
                               int j_lo, int j_hi, const HolderOptions& opts) {
  const ConeLeaders cl = cone_leaders(tf, x, width, j_lo, j_hi);
  HolderEstimate est;
  est.method = opts.polylog_correction > 0 ? "cone-regression-polylog" : "cone-regression";
  const int w_lo = cl.j_lo + opts.exclude_coarsest;
  const int w_hi = cl.j_hi - opts.exclude_finest;
  est.window_lo = w_lo;
  est.window_hi = w_hi;
  if (w_lo > w_hi) throw InsufficientDataError("estimate_holder: empty regression window");
  // cap: every leader in the window sits below the detectability floor
  bool all_below = true;
  for (int j = w_lo; j <= w_hi; ++j) {
    if (cl.M[j] > std::exp2(-opts.h_cap * w_lo)) all_below = false;
  }
  if (all_below) {
    est.capped = true;
    est.h_hat = opts.h_cap;
    return est;
  }
  std::vector<double> xs, ys;
  for (int j = w_lo; j <= w_hi; ++j) {
    if (cl.M[j] <= 0.0) continue;
    xs.push_back(static_cast<double>(j));
    ys.push_back(std::log2(cl.M[j]) +
                 opts.polylog_correction * std::log2(static_cast<double>(j)));
  }
  if (static_cast<int>(xs.size()) < opts.min_usable) {
    throw InsufficientDataError("estimate_holder: fewer than " +
                                std::to_string(opts.min_usable) + " usable scales");
  }
  const LineFit fit = fit_line(xs, ys);
  est.h_hat = std::clamp(-fit.slope, 0.0, opts.h_cap);
  est.r2 = fit.r2;
  est.residual = fit.residual;
  return est;
}

int witness_chain_length(double alpha, int j_max) {
  if (alpha < 1.0) throw ParameterError("witness_chain_length: alpha must be >= 1");
  int J = 1, n = 0;
  while (J <= j_max) {
    ++n;
    J = std::max(J + 1, static_cast<int>(std::ceil(alpha * J)) + 1);
  }
  return n;
}

std::pair<double, std::vector<Witness>> lacunary_alpha_point(double alpha, int j_max,
                                                             double rate_boost) {
  // bits along the chain plus a depth-53 tail, so the point is not itself
  // dyadic at any depth <= j_max and the deepest witness keeps certifying
  // hits down to the finest representable rate
  std::vector<int> chain;
  int J = 1;
  while (J <= 52) {
    chain.push_back(J);
    J = std::max(J + 1, static_cast<int>(std::ceil(rate_boost * alpha * J)) + 1);
  }
  if (chain.back() < 53) chain.push_back(53);
  double x = 0;
  for (int Jm : chain) x += std::ldexp(1.0, -Jm);
  std::vector<Witness> wits;
  double partial = 0;
  for (int Jm : chain) {
    if (Jm > j_max) break;
    partial += std::ldexp(1.0, -Jm);
    Witness w;
    w.J = Jm;
    w.K = {static_cast<std::int64_t>(std::llround(std::ldexp(partial, Jm)))};
    wits.push_back(w);
  }
  return {x, wits};
}

DyadicWitness classify_dyadic(const std::vector<double>& x, double alpha, int j_max) {
  if (alpha < 1.0) throw ParameterError("classify_dyadic: alpha must be >= 1");
  const int d = static_cast<int>(x.size());
  DyadicWitness out;
  out.x = x;
  out.alpha = alpha;
  // dyadic special case: exactly representable at depth <= j_max (alpha = inf
  // by convention); hits are still scanned and reported
  for (int j = 0; j <= j_max && !out.dyadic_flagged; ++j) {
    bool all_integral = true;
    for (double xi : x) {
      if (frac(std::ldexp(frac(xi), j)) != 0.0) all_integral = false;
    }
    out.dyadic_flagged = all_integral;
  }
  // hit scales: j with |x - k 2^-j| <= 2^{-alpha j}; witnesses deduped by
  // irreducible depth. Counting scales (not depths) keeps acceptance
  // monotone: a rate-alpha' hit is a rate-alpha hit for alpha <= alpha'.
  int hit_scales = 0;
  std::map<int, std::pair<std::vector<std::int64_t>, double>> by_depth;
  for (int j = 1; j <= j_max; ++j) {
    const std::int64_t two_j = std::int64_t(1) << j;
    std::vector<std::int64_t> k(d);
    double dist = 0;
    for (int i = 0; i < d; ++i) {
      auto ki = static_cast<std::int64_t>(std::llround(std::ldexp(frac(x[i]), j)));
      ki %= two_j;
      if (ki < 0) ki += two_j;
      k[i] = ki;
      dist = std::max(dist, torus_dist(frac(x[i]), std::ldexp(static_cast<double>(ki), -j)));
    }
    if (dist <= std::exp2(-alpha * j) * (1 + 1e-12)) {
      ++hit_scales;
      const auto irr = irreducible(j, k);
      const int J = irr.zero_flagged ? j : irr.J;
      const auto& K = irr.zero_flagged ? k : irr.K;
      auto it = by_depth.find(J);
      if (it == by_depth.end() || dist < it->second.second) {
        by_depth[J] = {K, dist};
      }
    }
  }
  for (const auto& [J, kd] : by_depth) {
    Witness w;
    w.J = J;
    w.K = kd.first;
    out.witnesses.push_back(w);
    out.distances.push_back(kd.second);
    out.rates.push_back(kd.second > 0
                            ? -std::log2(kd.second) / static_cast<double>(J)
                            : std::numeric_limits<double>::infinity());
  }
  out.hits_required =
      std::max(2, static_cast<int>(std::ceil(std::log2(static_cast<double>(j_max)))));
  out.accepted = out.dyadic_flagged || hit_scales >= out.hits_required;
  return out;
}

A1Result a1_membership(const PeriodizedG& G, const std::vector<double>& a, int j_lo, int j_hi) {
  if (static_cast<int>(a.size()) != G.d_prime) {
    throw ParameterError("a1_membership: offset dimension != d_prime");
  }
  A1Result out;
  out.j_lo = std::max(1, j_lo);
  out.j_hi = j_hi;
  out.margins.assign(j_hi + 1, 0.0);
  int j_a = -1;
  for (int j = out.j_lo; j <= j_hi; ++j) {
    double g = 1.0;
    for (double ai : a) g *= G.eval1(std::ldexp(frac(ai), j));
    const double margin =
        std::fabs(g) - std::pow(static_cast<double>(j), -2.0 * G.d_prime);
    out.margins[j] = margin;
    if (margin <= 0) j_a = -2;  // invalidate any earlier candidate
    if (margin > 0 && j_a < 0) j_a = j;
  }
  if (j_a >= 0) {
    out.accepted = true;
    out.j_a = j_a;
  }
  return out;
}

bool holder_candidate_test(const TraceField& tf, double gamma, double n_const,
                           const std::vector<double>& x, int j_max) {
  if (static_cast<int>(x.size()) != tf.dim()) {
    throw ParameterError("holder_candidate_test: point dimension mismatch");
  }
  bool ok = true;
  for (int j = 1; j <= std::min(j_max, tf.max_scale()) && ok; ++j) {
    tf.for_each_at_scale(j, [&](const CoeffIndex& idx, double v) {
      if (!ok || idx.l == 0) return;
      double dist = 0;
      for (int i = 0; i < tf.dim(); ++i) {
        dist = std::max(dist, std::ldexp(torus_dist(frac(x[i]),
                                                    std::ldexp(static_cast<double>(idx.k[i]),
                                                               -j)),
                                         j));
      }
      const double bound = n_const * std::exp2(-gamma * j) * std::pow(1.0 + dist, gamma);
      if (std::fabs(v) > bound * (1 + 1e-12)) ok = false;
    });
  }
  return ok;
}

std::optional<double> SpectrumEstimate::dhat_at(double h) const {
  const SpectrumBin* best = nullptr;
  double best_dist = 1e300;
  for (const auto& bin : bins) {
    const double d = std::fabs(bin.h - h);
    if (bin.has_estimate && d < best_dist) {
      best = &bin;
      best_dist = d;
    }
  }
  if (!best) return std::nullopt;
  return best->dhat;
}

SpectrumEstimate estimate_spectrum(const TraceField& tf, int j_lo, int j_hi,
                                   const std::vector<double>& h_grid,
                                   const SpectrumOptions& opts) {
  if (h_grid.size() < 2) throw ParameterError("estimate_spectrum: h grid too small");
  j_lo = std::max(1, j_lo);
  j_hi = std::min(tf.max_scale(), j_hi);
  const int d = tf.dim();
  if (static_cast<std::int64_t>(d) * j_hi > 26) {
    throw ParameterError("estimate_spectrum: scale range too large for dense leaders");
  }
  // dense per-scale max over bands
  std::vector<std::vector<double>> band_max(j_hi + 1);
  int usable = 0;
  for (int j = j_lo; j <= j_hi; ++j) {
    band_max[j].assign(std::uint64_t(1) << (d * j), 0.0);
    tf.for_each_at_scale(j, [&](const CoeffIndex& idx, double v) {
      auto& slot = band_max[j][encode_position(idx.k, idx.j)];
      slot = std::max(slot, std::fabs(v));
    });
    bool any = false;
    for (double v : band_max[j]) {
      if (v > 0) any = true;
    }
    usable += any;
  }
  if (usable < 6) {
    throw InsufficientScaleError("estimate_spectrum: needs >= 6 usable scales");
  }

  const double h0 = h_grid.front();
  const double step = h_grid[1] - h_grid[0];
  const int nbins = static_cast<int>(h_grid.size());
  std::vector<std::vector<double>> counts(nbins, std::vector<double>(j_hi + 1, 0.0));
  std::vector<double> below(j_hi + 1, 0.0), above(j_hi + 1, 0.0);

  // pass 1: leader log-magnitudes u = -log2 l - rho log2 j per position.
  // width 0 takes descendant leaders (the cube's own subtree); width >= 1
  // takes the classical cone of that width around the anchor.
  std::vector<std::vector<double>> u(j_hi + 1);
  const auto r = static_cast<std::int64_t>(std::floor(opts.width)) + 1;
  for (int j = j_lo; j <= j_hi; ++j) {
    const std::uint64_t total = std::uint64_t(1) << (d * j);
    u[j].assign(total, std::numeric_limits<double>::quiet_NaN());
    for (std::uint64_t pos = 0; pos < total; ++pos) {
      const auto k = decode_position(pos, j, d);
      double leader = 0;
      for (int jp = j; jp <= std::min(j_hi, j + opts.leader_depth); ++jp) {
        const std::int64_t scale_up = std::int64_t(1) << (jp - j);
        const std::int64_t two_jp = std::int64_t(1) << jp;
        std::vector<std::int64_t> base(d);
        for (int i = 0; i < d; ++i) base[i] = k[i] * scale_up;
        if (opts.width <= 0.0) {
          // descendants k' in [k 2^delta, (k+1) 2^delta) per coordinate
          std::uint64_t combos = 1;
          for (int i = 0; i < d; ++i) combos *= static_cast<std::uint64_t>(scale_up);
          for (std::uint64_t t = 0; t < combos; ++t) {
            std::uint64_t rem = t;
            std::uint64_t code = 0;
            for (int i = 0; i < d; ++i) {
              const auto off = static_cast<std::int64_t>(rem % scale_up);
              rem /= scale_up;
              code |= static_cast<std::uint64_t>(base[i] + off) << (jp * i);
            }
            leader = std::max(leader, band_max[jp][code]);
          }
          continue;
        }
        const std::int64_t rad = r * scale_up;
        // multi-index window around k * 2^{jp-j}
        std::uint64_t combos = 1;
        for (int i = 0; i < d; ++i) combos *= static_cast<std::uint64_t>(2 * rad + 1);
        for (std::uint64_t t = 0; t < combos; ++t) {
          std::uint64_t rem = t;
          std::uint64_t code = 0;
          bool in_cone = true;
          for (int i = 0; i < d; ++i) {
            const std::int64_t off = static_cast<std::int64_t>(rem % (2 * rad + 1)) - rad;
            rem /= (2 * rad + 1);
            std::int64_t kp = (base[i] + off) % two_jp;
            if (kp < 0) kp += two_jp;
            const double dist = torus_dist(std::ldexp(static_cast<double>(k[i]), -j),
                                           std::ldexp(static_cast<double>(kp), -jp));
            if (dist > opts.width * std::ldexp(1.0, -j) * (1 + 1e-12)) {
              in_cone = false;
              break;
            }
            code |= static_cast<std::uint64_t>(kp) << (jp * i);
          }
          if (in_cone) leader = std::max(leader, band_max[jp][code]);
        }
      }
      if (leader > 0.0) {
        u[j][pos] = -std::log2(leader) -
                    opts.polylog_correction * std::log2(static_cast<double>(j));
      }
    }
  }

  // optional intercept registration from the per-scale medians
  double intercept = 0.0;
  if (opts.register_intercept) {
    std::vector<double> xs, ys;
    for (int j = j_lo; j <= j_hi; ++j) {
      std::vector<double> finite;
      finite.reserve(u[j].size());
      for (double v : u[j]) {
        if (!std::isnan(v)) finite.push_back(v);
      }
      if (finite.size() < 4) continue;
      const auto mid = finite.begin() + static_cast<std::ptrdiff_t>(finite.size() / 2);
      std::nth_element(finite.begin(), mid, finite.end());
      xs.push_back(static_cast<double>(j));
      ys.push_back(*mid);
    }
    if (xs.size() >= 3) intercept = fit_line(xs, ys).intercept;
    intercept += opts.register_shift;
  }

  // pass 2: bin by the upper-edge convention, h in (h_b - step, h_b]
  for (int j = j_lo; j <= j_hi; ++j) {
    for (double v : u[j]) {
      if (std::isnan(v)) continue;
      const double h = (v - intercept) / static_cast<double>(j);
      const auto bin = static_cast<std::int64_t>(std::ceil((h - h0) / step - 1e-9));
      if (bin < 0) {
        below[j] += 1.0;
      } else if (bin >= nbins) {
        above[j] += 1.0;
      } else {
        counts[bin][j] += 1.0;
      }
    }
  }

  SpectrumEstimate out;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  out.dim = d;
  const double finest_total = std::exp2(static_cast<double>(d) * j_hi);
  out.below_range_mass = below[j_hi] / finest_total;
  out.above_range_mass = above[j_hi] / finest_total;
  for (int b = 0; b < nbins; ++b) {
    SpectrumBin bin;
    bin.h = h_grid[b];
    bin.mass_finest = counts[b][j_hi] / finest_total;
    // fit over the largest `fit_scales` scales with enough mass
    std::vector<double> xs, ys;
    for (int j = j_hi; j >= j_lo && static_cast<int>(xs.size()) < opts.fit_scales; --j) {
      if (counts[b][j] >= static_cast<double>(opts.min_count)) {
        xs.push_back(static_cast<double>(j));
        ys.push_back(std::log2(counts[b][j]));
      }
    }
    if (xs.size() >= 3) {
      const LineFit fit = fit_line(xs, ys);
      bin.has_estimate = true;
      bin.raw_slope = fit.slope;
      bin.dhat = std::min(fit.slope, static_cast<double>(d));
      bin.residual = fit.residual;
    }
    out.bins.push_back(bin);
  }
  return out;
}

TraceField synthetic_cone_field(const std::vector<double>& x, double h0, int j_max,
                                double width) {
  const int d = static_cast<int>(x.size());
  TraceField tf(d, j_max, {});
  for (int j = 1; j <= j_max; ++j) {
    const double v = std::exp2(-h0 * j);
    for (const auto& k : cone_positions(x, j, width)) {
      tf.set(CoeffIndex{j, k, 1}, v);
    }
  }
  return tf;
}

TraceField synthetic_monofractal_field(int d, double h0, int j_max) {
  TraceField tf(d, j_max, {});
  CoeffIndex idx;
  for (int j = 1; j <= j_max; ++j) {
    idx.j = j;
    const double v = std::exp2(-h0 * j);
    const std::uint64_t total = std::uint64_t(1) << (d * j);
    for (std::uint64_t pos = 0; pos < total; ++pos) {
      idx.k = decode_position(pos, j, d);
      for (unsigned l = 1; l < (1u << d); ++l) {
        idx.l = l;
        tf.set(idx, v);
      }
    }
  }
  return tf;
}

std::string HolderEstimate::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"h_hat\": " << h_hat << ", \"capped\": " << (capped ? "true" : "false")
     << ", \"window\": [" << window_lo << ", " << window_hi << "], \"r2\": " << r2
     << ", \"residual\": " << residual << ", \"method\": \"" << method << "\"}";
  return os.str();
}

std::string DyadicWitness::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"alpha\": " << alpha << ", \"accepted\": " << (accepted ? "true" : "false")
     << ", \"dyadic\": " << (dyadic_flagged ? "true" : "false")
     << ", \"hits_required\": " << hits_required << ", \"witnesses\": [";
  for (size_t n = 0; n < witnesses.size(); ++n) {
    os << (n ? ", " : "") << "{\"J\": " << witnesses[n].J << ", \"K\": [";
    for (size_t i = 0; i < witnesses[n].K.size(); ++i) {
      os << (i ? ", " : "") << witnesses[n].K[i];
    }
    os << "], \"dist\": " << distances[n] << ", \"rate\": ";
    if (std::isinf(rates[n])) {
      os << "\"inf\"";
    } else {
      os << rates[n];
    }
    os << "}";
  }
  os << "]}";
  return os.str();
}

std::string SpectrumEstimate::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "h,dhat\n";
  for (const auto& bin : bins) {
    if (bin.has_estimate) os << bin.h << "," << bin.dhat << "\n";
  }
  return os.str();
}

std::string SpectrumEstimate::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"j_lo\": " << j_lo << ", \"j_hi\": " << j_hi << ", \"bins\": [";
  bool first = true;
  for (const auto& bin : bins) {
    if (!first) os << ", ";
    first = false;
    os << "{\"h\": " << bin.h << ", \"dhat\": ";
    if (bin.has_estimate) {
      os << bin.dhat;
    } else {
      os << "null";
    }
    os << ", \"raw_slope\": " << bin.raw_slope << ", \"residual\": " << bin.residual
       << ", \"mass_finest\": " << bin.mass_finest << "}";
  }
  os << "], \"below_range_mass\": " << below_range_mass
     << ", \"above_range_mass\": " << above_range_mass << "}";
  return os.str();
}

}  // namespace besov
