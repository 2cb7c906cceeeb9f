#include "besovtrace/trace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace besov {

TraceField::TraceField(int d, int j_max, std::vector<double> offset)
    : dim_(d), j_max_(j_max), offset_(std::move(offset)) {
  if (d < 1 || d > 8) throw ParameterError("TraceField: dim must be in [1,8]");
  if (j_max < 1 || d * j_max > 62) throw ParameterError("TraceField: dim*j_max out of range");
  blocks_.resize(j_max + 1);
}

void TraceField::validate(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) throw ParameterError("TraceField: scale out of range");
  if (idx.dim() != dim_) throw ParameterError("TraceField: index dimension mismatch");
  if (idx.l >= (1u << dim_)) throw ParameterError("TraceField: type bitmask out of range");
  for (std::int64_t ki : idx.k) {
    if (ki < 0 || ki >= (std::int64_t(1) << idx.j)) {
      throw ParameterError("TraceField: position out of range");
    }
  }
}

Block& TraceField::block(int j, unsigned l) {
  auto& per_scale = blocks_[j];
  auto it = per_scale.find(l);
  if (it == per_scale.end()) {
    const std::uint64_t domain = std::uint64_t(1) << (dim_ * j);
    it = per_scale.emplace(l, Block(domain, domain <= (std::uint64_t(1) << 22))).first;
  }
  return it->second;
}

void TraceField::set(const CoeffIndex& idx, double value) {
  validate(idx);
  block(idx.j, idx.l).set(encode_position(idx.k, idx.j), value);
}

void TraceField::add(const CoeffIndex& idx, double value) {
  validate(idx);
  block(idx.j, idx.l).add(encode_position(idx.k, idx.j), value);
}

double TraceField::coeff(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) return 0.0;
  if (idx.l >= (1u << dim_)) return 0.0;
  const auto& per_scale = blocks_[idx.j];
  auto it = per_scale.find(idx.l);
  if (it == per_scale.end()) return 0.0;
  return it->second.get(encode_position(idx.k, idx.j));
}

std::uint64_t TraceField::nonzero_count() const {
  std::uint64_t n = 0;
  for (const auto& per_scale : blocks_) {
    for (const auto& [l, block] : per_scale) n += block.nonzero_count();
  }
  return n;
}

bool TraceField::wavelet_band_empty() const {
  for (const auto& per_scale : blocks_) {
    for (const auto& [l, block] : per_scale) {
      if (l != 0 && block.nonzero_count() > 0) return false;
    }
  }
  return true;
}

bool TraceField::scaling_band_empty() const {
  for (const auto& per_scale : blocks_) {
    auto it = per_scale.find(0u);
    if (it != per_scale.end() && it->second.nonzero_count() > 0) return false;
  }
  return true;
}

CoeffField TraceField::wavelet_band(const BesovParams& params) const {
  CoeffField out(dim_, j_max_, params);
  for_each([&](const CoeffIndex& idx, double v) {
    if (idx.l != 0) out.set(idx, v);
  });
  return out;
}

TraceField TraceField::from_field(const CoeffField& field) {
  TraceField tf(field.dim(), field.max_scale(), {});
  field.for_each([&](const CoeffIndex& idx, double v) { tf.set(idx, v); });
  return tf;
}

OffsetWeights OffsetWeights::at(const WaveletSystem& system, const std::vector<double>& a,
                                int j) {
  OffsetWeights out;
  out.j = j;
  const int d_prime = static_cast<int>(a.size());
  const std::int64_t two_j = std::int64_t(1) << j;
  const int S = system.support_length;
  out.weights.resize(d_prime);
  for (int i = 0; i < d_prime; ++i) {
    const double u = std::ldexp(frac(a[i]), j);
    for (int lp = 0; lp < 2; ++lp) {
      auto& list = out.weights[i][lp];
      if (two_j <= S + 1) {
        for (std::int64_t kk = 0; kk < two_j; ++kk) {
          const double w = system.eval_periodized(lp, u - static_cast<double>(kk), two_j);
          if (w != 0.0) list.emplace_back(kk, w);
        }
      } else {
        const auto base = static_cast<std::int64_t>(std::floor(u));
        for (std::int64_t kk = base - S; kk <= base; ++kk) {
          const double w = system.eval(lp, u - static_cast<double>(kk));
          if (w == 0.0) continue;
          std::int64_t kw = kk % two_j;
          if (kw < 0) kw += two_j;
          list.emplace_back(kw, w);
        }
      }
    }
  }
  return out;
}

namespace {

// Dense lookup tables w[i][l'][k'] for the scatter path.
struct DenseWeights {
  std::vector<std::array<std::vector<double>, 2>> w;

  explicit DenseWeights(const OffsetWeights& ow) {
    const std::int64_t two_j = std::int64_t(1) << ow.j;
    w.resize(ow.weights.size());
    for (size_t i = 0; i < ow.weights.size(); ++i) {
      for (int lp = 0; lp < 2; ++lp) {
        w[i][lp].assign(two_j, 0.0);
        for (const auto& [k, v] : ow.weights[i][lp]) w[i][lp][k] += v;
      }
    }
  }
};

void trace_scatter(const CoeffField& source, const WaveletSystem& system,
                   const std::vector<double>& a, int d, TraceField& out) {
  const int D = source.dim();
  const int d_prime = D - d;
  for (int j = 1; j <= source.max_scale(); ++j) {
    const DenseWeights weights(OffsetWeights::at(system, a, j));
    CoeffIndex target;
    target.j = j;
    target.k.resize(d);
    source.for_each_at_scale(j, [&](const CoeffIndex& idx, double c) {
      double wprod = 1.0;
      for (int i = 0; i < d_prime; ++i) {
        const int lp = (idx.l >> (d + i)) & 1;
        wprod *= weights.w[i][lp][idx.k[d + i]];
        if (wprod == 0.0) break;
      }
      if (wprod == 0.0) return;
      for (int i = 0; i < d; ++i) target.k[i] = idx.k[i];
      target.l = idx.l & ((1u << d) - 1);
      out.add(target, c * wprod);
    });
  }
}

void trace_gather(const CoefficientSource& source, const WaveletSystem& system,
                  const std::vector<double>& a, int d, TraceField& out) {
  const int D = source.dim();
  const int d_prime = D - d;
  for (int j = 1; j <= source.max_scale(); ++j) {
    const OffsetWeights ow = OffsetWeights::at(system, a, j);
    const std::uint64_t positions = std::uint64_t(1) << (d * j);
    CoeffIndex idx;
    idx.j = j;
    idx.k.resize(D);
    CoeffIndex target;
    target.j = j;
    target.k.resize(d);
    for (unsigned l = 0; l < (1u << d); ++l) {
      for (std::uint64_t pos = 0; pos < positions; ++pos) {
        const auto kd = decode_position(pos, j, d);
        for (int i = 0; i < d; ++i) idx.k[i] = kd[i];
        double acc = 0;
        // sum over l' (full range for l != 0, nonzero l' for the scaling band)
        // and over the cartesian product of the k' windows
        for (unsigned lp = (l == 0 ? 1u : 0u); lp < (1u << d_prime); ++lp) {
          idx.l = l | (lp << d);
          std::uint64_t combos = 1;
          bool empty = false;
          for (int i = 0; i < d_prime; ++i) {
            const size_t sz = ow.weights[i][(lp >> i) & 1].size();
            if (sz == 0) {
              empty = true;
              break;
            }
            combos *= sz;
          }
          if (empty) continue;
          for (std::uint64_t t = 0; t < combos; ++t) {
            std::uint64_t rem = t;
            double wprod = 1.0;
            for (int i = 0; i < d_prime; ++i) {
              const auto& list = ow.weights[i][(lp >> i) & 1];
              const auto& [kp, wv] = list[rem % list.size()];
              rem /= list.size();
              idx.k[d + i] = kp;
              wprod *= wv;
            }
            const double c = source.coeff(idx);
            if (c != 0.0) acc += c * wprod;
          }
        }
        if (acc != 0.0) {
          target.k = kd;
          target.l = l;
          out.set(target, acc);
        }
      }
    }
  }
}

}  // namespace

TraceField trace(const CoefficientSource& source, const WaveletSystem& system,
                 const std::vector<double>& a, int d) {
  const int D = source.dim();
  if (d < 1 || d >= D) throw ParameterError("trace: requires 1 <= d < D");
  if (static_cast<int>(a.size()) != D - d) {
    throw ParameterError("trace: offset dimension must be D - d");
  }
  if (system.psi.empty()) throw DependencyError("trace: wavelet samples required");
  std::vector<double> aw(a.size());
  for (size_t i = 0; i < a.size(); ++i) aw[i] = frac(a[i]);
  TraceField out(d, source.max_scale(), aw);
  if (const auto* mat = dynamic_cast<const CoeffField*>(&source)) {
    trace_scatter(*mat, system, aw, d, out);
  } else {
    trace_gather(source, system, aw, d, out);
  }
  return out;
}

double reconstruct_trace_at(const TraceField& tf, const WaveletSystem& system,
                            const std::vector<double>& x) {
  const int d = tf.dim();
  if (static_cast<int>(x.size()) != d) {
    throw ParameterError("reconstruct_trace_at: point dimension mismatch");
  }
  double total = 0;
  for (int j = 1; j <= tf.max_scale(); ++j) {
    const std::int64_t two_j = std::int64_t(1) << j;
    tf.for_each_at_scale(j, [&](const CoeffIndex& idx, double v) {
      double prod = 1.0;
      for (int i = 0; i < d && prod != 0.0; ++i) {
        const double u = std::ldexp(frac(x[i]), j) - static_cast<double>(idx.k[i]);
        prod *= system.eval_periodized((idx.l >> i) & 1, u, two_j);
      }
      total += v * prod;
    });
  }
  return total;
}

double pointwise_consistency(const CoefficientSource& field, const WaveletSystem& system,
                             const std::vector<double>& a, const std::vector<double>& x) {
  const int D = field.dim();
  const int d = static_cast<int>(x.size());
  if (d < 1 || d >= D || static_cast<int>(a.size()) != D - d) {
    throw ParameterError("pointwise_consistency: dimension mismatch");
  }
  std::vector<double> point(D);
  for (int i = 0; i < d; ++i) point[i] = x[i];
  for (int i = d; i < D; ++i) point[i] = a[i - d];
  const double lhs = reconstruct_at(field, system, point);
  const TraceField tf = trace(field, system, a, d);
  const double rhs = reconstruct_trace_at(tf, system, x);
  return std::fabs(lhs - rhs);
}

double mixed_besov_norm(const TraceField& tf, double s, double p, double q) {
  std::vector<double> a(tf.max_scale() + 1, 0.0);
  for (int j = 1; j <= tf.max_scale(); ++j) {
    double sum = 0;
    tf.for_each_at_scale(j, [&](const CoeffIndex&, double v) {
      sum += std::pow(std::fabs(v), p);
    });
    a[j] = std::exp2((s * p - tf.dim()) * j) * sum;
  }
  if (std::isinf(q)) {
    double m = 0;
    for (int j = 1; j <= tf.max_scale(); ++j) m = std::max(m, std::pow(a[j], 1.0 / p));
    return m;
  }
  double acc = 0;
  for (int j = 1; j <= tf.max_scale(); ++j) {
    if (a[j] > 0) acc += std::pow(a[j], q / p);
  }
  return std::pow(acc, 1.0 / q);
}

namespace {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("unexpected end of file");
  return v;
}

}  // namespace

void save_trace_field(const TraceField& tf, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "little-endian file format");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("BCF1", 4);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(tf.dim()));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(tf.max_scale()));
  write_raw<double>(os, 0.0);  // s,p,q slots kept for layout compatibility
  write_raw<double>(os, 0.0);
  write_raw<double>(os, 0.0);
  write_raw<std::uint64_t>(os, tf.nonzero_count());
  // offset extension
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(tf.offset().size()));
  for (double ai : tf.offset()) write_raw<double>(os, ai);
  tf.for_each([&](const CoeffIndex& idx, double v) {
    write_raw<std::uint8_t>(os, static_cast<std::uint8_t>(idx.j));
    for (std::int64_t ki : idx.k) write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ki));
    write_raw<std::uint16_t>(os, static_cast<std::uint16_t>(idx.l));
    write_raw<std::uint8_t>(os, idx.l == 0 ? 0 : 1);  // band flag
    write_raw<double>(os, v);
  });
  if (!os) throw IoError("write failed: " + path);
}

TraceField load_trace_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BCF1", 4) != 0) throw IoError(path + ": not a BCF1 file");
  const int dim = static_cast<int>(read_raw<std::uint32_t>(is));
  const int j_max = static_cast<int>(read_raw<std::uint32_t>(is));
  read_raw<double>(is);
  read_raw<double>(is);
  read_raw<double>(is);
  const auto count = read_raw<std::uint64_t>(is);
  const auto a_dim = read_raw<std::uint32_t>(is);
  std::vector<double> offset(a_dim);
  for (auto& ai : offset) ai = read_raw<double>(is);
  TraceField tf(dim, j_max, offset);
  CoeffIndex idx;
  idx.k.resize(dim);
  for (std::uint64_t e = 0; e < count; ++e) {
    idx.j = static_cast<int>(read_raw<std::uint8_t>(is));
    for (int i = 0; i < dim; ++i) idx.k[i] = read_raw<std::uint32_t>(is);
    idx.l = read_raw<std::uint16_t>(is);
    const auto band = read_raw<std::uint8_t>(is);
    if ((band == 0) != (idx.l == 0)) throw IoError(path + ": band flag inconsistent with type");
    const double v = read_raw<double>(is);
    tf.set(idx, v);
  }
  return tf;
}

}  // namespace besov
