#include "besovtrace/field.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace besov {

IrreducibleIndex irreducible(int j, const std::vector<std::int64_t>& k) {
  if (j < 1) throw ParameterError("irreducible: scale must be >= 1");
  IrreducibleIndex out;
  bool all_zero = true;
  int shift = 64;
  for (std::int64_t ki : k) {
    if (ki < 0 || ki >= (std::int64_t(1) << j)) {
      throw ParameterError("irreducible: position out of range");
    }
    if (ki != 0) {
      all_zero = false;
      shift = std::min(shift, std::countr_zero(static_cast<std::uint64_t>(ki)));
    }
  }
  if (all_zero) {
    out.J = 0;
    out.K.assign(k.size(), 0);
    out.zero_flagged = true;
    return out;
  }
  if (shift > j) shift = j;
  out.J = j - shift;
  out.K.resize(k.size());
  for (size_t i = 0; i < k.size(); ++i) out.K[i] = k[i] >> shift;
  return out;
}

std::uint64_t encode_position(const std::vector<std::int64_t>& k, int j) {
  std::uint64_t code = 0;
  for (size_t i = 0; i < k.size(); ++i) {
    code |= static_cast<std::uint64_t>(k[i]) << (j * static_cast<int>(i));
  }
  return code;
}

std::vector<std::int64_t> decode_position(std::uint64_t code, int j, int dim) {
  std::vector<std::int64_t> k(dim);
  const std::uint64_t mask = (std::uint64_t(1) << j) - 1;
  for (int i = 0; i < dim; ++i) k[i] = static_cast<std::int64_t>((code >> (j * i)) & mask);
  return k;
}

double CoefficientSource::scale_power_sum(int j, double p) const {
  // dense enumeration; exact but exponential in dim*j
  const int d = dim();
  if (j < 1 || j > max_scale()) return 0.0;
  if (static_cast<std::int64_t>(d) * j > 40) {
    throw ParameterError("scale_power_sum: dense enumeration too large; source must override");
  }
  const std::uint64_t positions = std::uint64_t(1) << (d * j);
  double total = 0;
  CoeffIndex idx;
  idx.j = j;
  for (unsigned l = 1; l < (1u << d); ++l) {
    idx.l = l;
    for (std::uint64_t pos = 0; pos < positions; ++pos) {
      idx.k = decode_position(pos, j, d);
      const double c = coeff(idx);
      if (c != 0.0) total += std::pow(std::fabs(c), p);
    }
  }
  return total;
}

Block::Block(std::uint64_t domain_size, bool dense_hint) : domain_(domain_size) {
  if (dense_hint && domain_ <= (std::uint64_t(1) << 24)) {
    is_dense_ = true;
    dense_.assign(domain_, 0.0);
  }
}

void Block::maybe_densify() {
  if (is_dense_ || domain_ > (std::uint64_t(1) << 24)) return;
  if (sparse_.size() * 4 < domain_) return;
  dense_.assign(domain_, 0.0);
  for (const auto& [pos, v] : sparse_) dense_[pos] = v;
  sparse_.clear();
  is_dense_ = true;
}

void Block::set(std::uint64_t pos, double value) {
  if (is_dense_) {
    dense_[pos] = value;
    return;
  }
  if (value == 0.0) {
    sparse_.erase(pos);
  } else {
    sparse_[pos] = value;
    maybe_densify();
  }
}

void Block::add(std::uint64_t pos, double value) {
  if (value == 0.0) return;
  if (is_dense_) {
    dense_[pos] += value;
    return;
  }
  auto [it, inserted] = sparse_.try_emplace(pos, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0.0) sparse_.erase(it);
  }
  maybe_densify();
}

double Block::get(std::uint64_t pos) const {
  if (is_dense_) return dense_[pos];
  auto it = sparse_.find(pos);
  return it == sparse_.end() ? 0.0 : it->second;
}

std::uint64_t Block::nonzero_count() const {
  if (!is_dense_) return sparse_.size();
  std::uint64_t n = 0;
  for (double v : dense_) n += v != 0.0;
  return n;
}

CoeffField::CoeffField(int dim, int j_max, BesovParams params)
    : dim_(dim), j_max_(j_max), params_(params) {
  if (dim < 1 || dim > 8) throw ParameterError("CoeffField: dim must be in [1,8]");
  if (j_max < 1 || dim * j_max > 62) throw ParameterError("CoeffField: dim*j_max out of range");
  if (params_.dim != dim) throw ParameterError("CoeffField: params.dim mismatch");
  blocks_.resize(j_max + 1);
}

void CoeffField::validate(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) throw ParameterError("CoeffField: scale out of range");
  if (idx.dim() != dim_) throw ParameterError("CoeffField: index dimension mismatch");
  if (idx.l == 0 || idx.l >= (1u << dim_)) {
    throw ParameterError("CoeffField: type bitmask must be in L^dim (nonzero)");
  }
  for (std::int64_t ki : idx.k) {
    if (ki < 0 || ki >= (std::int64_t(1) << idx.j)) {
      throw ParameterError("CoeffField: position out of range");
    }
  }
}

Block& CoeffField::block(int j, unsigned l) {
  auto& per_scale = blocks_[j];
  auto it = per_scale.find(l);
  if (it == per_scale.end()) {
    it = per_scale.emplace(l, Block(std::uint64_t(1) << (dim_ * j))).first;
  }
  return it->second;
}

void CoeffField::set(const CoeffIndex& idx, double value) {
  validate(idx);
  block(idx.j, idx.l).set(encode_position(idx.k, idx.j), value);
}

void CoeffField::add(const CoeffIndex& idx, double value) {
  validate(idx);
  block(idx.j, idx.l).add(encode_position(idx.k, idx.j), value);
}

double CoeffField::coeff(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) return 0.0;
  if (idx.l == 0 || idx.l >= (1u << dim_)) return 0.0;
  const auto& per_scale = blocks_[idx.j];
  auto it = per_scale.find(idx.l);
  if (it == per_scale.end()) return 0.0;
  return it->second.get(encode_position(idx.k, idx.j));
}

double CoeffField::scale_power_sum(int j, double p) const {
  if (j < 1 || j > j_max_) return 0.0;
  double total = 0;
  for (const auto& [l, block] : blocks_[j]) {
    block.for_each([&](std::uint64_t, double v) { total += std::pow(std::fabs(v), p); });
  }
  return total;
}

std::uint64_t CoeffField::nonzero_count() const {
  std::uint64_t n = 0;
  for (const auto& per_scale : blocks_) {
    for (const auto& [l, block] : per_scale) n += block.nonzero_count();
  }
  return n;
}

CoeffField& CoeffField::operator*=(double t) {
  for (int j = 1; j <= j_max_; ++j) {
    for (auto& [l, block] : blocks_[j]) {
      std::vector<std::pair<std::uint64_t, double>> entries;
      block.for_each([&](std::uint64_t pos, double v) { entries.emplace_back(pos, v); });
      for (const auto& [pos, v] : entries) block.set(pos, t * v);
    }
  }
  return *this;
}

CoeffField operator+(const CoeffField& a, const CoeffField& b) {
  if (a.dim_ != b.dim_) throw ParameterError("field +: dimension mismatch");
  CoeffField out(a.dim_, std::max(a.j_max_, b.j_max_), a.params_);
  a.for_each([&](const CoeffIndex& idx, double v) { out.add(idx, v); });
  b.for_each([&](const CoeffIndex& idx, double v) { out.add(idx, v); });
  return out;
}

RademacherField::RademacherField(BesovParams params, int j_max, std::uint64_t seed, double delta)
    : params_(params), j_max_(j_max), seed_(seed), delta_(delta) {
  if (params_.s - params_.dim / params_.p <= 0) {
    throw ParameterError("RademacherField: requires s - dim/p > 0");
  }
}

double RademacherField::amplitude(int j) const {
  const double rho = params_.q_is_inf() ? delta_ : 2.0 / params_.q + delta_;
  return std::pow(static_cast<double>(j), -rho) * std::exp2(-params_.s * j);
}

double RademacherField::coeff(const CoeffIndex& idx) const {
  if (idx.j < 1 || idx.j > j_max_) return 0.0;
  if (idx.l == 0 || idx.l >= (1u << params_.dim)) return 0.0;
  if (idx.dim() != params_.dim) return 0.0;
  std::uint64_t h = hash_combine(seed_, 0x5eedf1e1dULL);
  h = hash_combine(h, static_cast<std::uint64_t>(idx.j));
  h = hash_combine(h, static_cast<std::uint64_t>(idx.l));
  for (std::int64_t ki : idx.k) h = hash_combine(h, static_cast<std::uint64_t>(ki));
  const double sign = (h & 1) ? 1.0 : -1.0;
  return sign * amplitude(idx.j);
}

double RademacherField::scale_power_sum(int j, double p) const {
  if (j < 1 || j > j_max_) return 0.0;
  const double count = ((std::uint64_t(1) << params_.dim) - 1) *
                       std::exp2(static_cast<double>(params_.dim) * j);
  return count * std::pow(amplitude(j), p);
}

std::vector<double> per_scale_energy(const CoefficientSource& field, double p, double s) {
  std::vector<double> a(field.max_scale() + 1, 0.0);
  for (int j = 1; j <= field.max_scale(); ++j) {
    a[j] = std::exp2((s * p - field.dim()) * j) * field.scale_power_sum(j, p);
  }
  return a;
}

double besov_quasinorm(const CoefficientSource& field, const BesovParams& params) {
  if (params.dim != field.dim()) {
    throw ParameterError("besov_quasinorm: params.dim != field dim");
  }
  const auto a = per_scale_energy(field, params.p, params.s);
  if (params.q_is_inf()) {
    double m = 0;
    for (int j = 1; j < static_cast<int>(a.size()); ++j) {
      m = std::max(m, std::pow(a[j], 1.0 / params.p));
    }
    return m;
  }
  double acc = 0;
  for (int j = 1; j < static_cast<int>(a.size()); ++j) {
    if (a[j] > 0) acc += std::pow(a[j], params.q / params.p);
  }
  return std::pow(acc, 1.0 / params.q);
}

EmbeddingCheck embedding_check(const CoefficientSource& field, double s, double p, double q,
                               double q_prime, double eps) {
  if (!(q < q_prime)) throw ParameterError("embedding_check: requires q < q'");
  if (!(eps > 0)) throw ParameterError("embedding_check: requires eps > 0");
  EmbeddingCheck out;
  const int d = field.dim();
  out.norm_q_prime = besov_quasinorm(field, BesovParams{s, p, q_prime, d});
  out.norm_q = besov_quasinorm(field, BesovParams{s, p, q, d});
  out.norm_eps_down = besov_quasinorm(field, BesovParams{s - eps, p, q, d});
  // Holder on sequences: || 2^{-eps j} b_j ||_q <= || 2^{-eps j} ||_u || b ||_q'
  // with 1/u = 1/q - 1/q'.
  double u;
  if (std::isinf(q_prime)) {
    u = q;
  } else {
    u = q * q_prime / (q_prime - q);
  }
  double cu = 0;
  for (int j = 1; j <= field.max_scale(); ++j) cu += std::exp2(-eps * u * j);
  out.embedding_constant = std::pow(cu, 1.0 / u);
  out.first_inequality = out.norm_q_prime <= out.norm_q * (1 + 1e-12) + 1e-300;
  out.second_inequality =
      out.norm_eps_down <= out.embedding_constant * out.norm_q_prime * (1 + 1e-12) + 1e-300;
  return out;
}

CoeffField synthesize_random_field(const BesovParams& params, int j_max, std::uint64_t seed,
                                   double delta) {
  if (params.s - params.dim / params.p <= 0) {
    throw ParameterError("synthesize_random_field: requires s - dim/p > 0");
  }
  const double entries =
      ((1 << params.dim) - 1) * std::exp2(static_cast<double>(params.dim) * (j_max + 1));
  if (entries > std::exp2(25)) {
    throw ParameterError(
        "synthesize_random_field: too large to materialize; use RademacherField");
  }
  RademacherField law(params, j_max, seed, delta);
  CoeffField field(params.dim, j_max, params);
  CoeffIndex idx;
  for (int j = 1; j <= j_max; ++j) {
    idx.j = j;
    const std::uint64_t positions = std::uint64_t(1) << (params.dim * j);
    for (unsigned l = 1; l < (1u << params.dim); ++l) {
      idx.l = l;
      for (std::uint64_t pos = 0; pos < positions; ++pos) {
        idx.k = decode_position(pos, j, params.dim);
        field.set(idx, law.coeff(idx));
      }
    }
  }
  return field;
}

double reconstruct_at(const CoefficientSource& field, const WaveletSystem& system,
                      const std::vector<double>& point) {
  const int d = field.dim();
  if (static_cast<int>(point.size()) != d) {
    throw ParameterError("reconstruct_at: point dimension mismatch");
  }
  const int S = system.support_length;
  double total = 0;
  CoeffIndex idx;
  for (int j = 1; j <= field.max_scale(); ++j) {
    idx.j = j;
    const std::int64_t two_j = std::int64_t(1) << j;
    // k ranges over the support window per coordinate: 2^j x - k in [0, S]
    std::vector<std::vector<std::pair<std::int64_t, std::array<double, 2>>>> w(d);
    for (int i = 0; i < d; ++i) {
      const double u = std::ldexp(point[i], j);
      const auto base = static_cast<std::int64_t>(std::floor(u));
      const std::int64_t lo = base - S, hi = base;
      if (two_j <= S + 1) {
        // wrapped windows collide; accumulate over the whole ring
        for (std::int64_t kk = 0; kk < two_j; ++kk) {
          std::array<double, 2> ww{system.eval_periodized(0, u - kk, two_j),
                                   system.eval_periodized(1, u - kk, two_j)};
          if (ww[0] != 0.0 || ww[1] != 0.0) w[i].emplace_back(kk, ww);
        }
      } else {
        for (std::int64_t kk = lo; kk <= hi; ++kk) {
          std::int64_t kw = kk % two_j;
          if (kw < 0) kw += two_j;
          std::array<double, 2> ww{system.eval(0, u - kk), system.eval(1, u - kk)};
          if (ww[0] != 0.0 || ww[1] != 0.0) w[i].emplace_back(kw, ww);
        }
      }
    }
    // tensor product over the window, all l in L^d
    std::vector<size_t> cursor(d, 0);
    std::vector<std::int64_t> k(d);
    const std::uint64_t combos = [&] {
      std::uint64_t c = 1;
      for (int i = 0; i < d; ++i) c *= w[i].size();
      return c;
    }();
    for (std::uint64_t t = 0; t < combos; ++t) {
      std::uint64_t rem = t;
      for (int i = 0; i < d; ++i) {
        cursor[i] = rem % w[i].size();
        rem /= w[i].size();
        k[i] = w[i][cursor[i]].first;
      }
      idx.k = k;
      for (unsigned l = 1; l < (1u << d); ++l) {
        idx.l = l;
        const double c = field.coeff(idx);
        if (c == 0.0) continue;
        double prod = 1;
        for (int i = 0; i < d; ++i) prod *= w[i][cursor[i]].second[(l >> i) & 1];
        total += c * prod;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// BCF1 io
// ---------------------------------------------------------------------------

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

void save_field(const CoeffField& field, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "little-endian file format");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write("BCF1", 4);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(field.dim()));
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(field.max_scale()));
  write_raw<double>(os, field.params().s);
  write_raw<double>(os, field.params().p);
  write_raw<double>(os, field.params().q);
  write_raw<std::uint64_t>(os, field.nonzero_count());
  field.for_each([&](const CoeffIndex& idx, double v) {
    write_raw<std::uint8_t>(os, static_cast<std::uint8_t>(idx.j));
    for (std::int64_t ki : idx.k) write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(ki));
    write_raw<std::uint16_t>(os, static_cast<std::uint16_t>(idx.l));
    write_raw<double>(os, v);
  });
  if (!os) throw IoError("write failed: " + path);
}

CoeffField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BCF1", 4) != 0) throw IoError(path + ": not a BCF1 field file");
  const int dim = static_cast<int>(read_raw<std::uint32_t>(is));
  const int j_max = static_cast<int>(read_raw<std::uint32_t>(is));
  BesovParams params;
  params.dim = dim;
  params.s = read_raw<double>(is);
  params.p = read_raw<double>(is);
  params.q = read_raw<double>(is);
  const auto count = read_raw<std::uint64_t>(is);
  CoeffField field(dim, j_max, params);
  CoeffIndex idx;
  idx.k.resize(dim);
  for (std::uint64_t e = 0; e < count; ++e) {
    idx.j = static_cast<int>(read_raw<std::uint8_t>(is));
    for (int i = 0; i < dim; ++i) idx.k[i] = read_raw<std::uint32_t>(is);
    idx.l = read_raw<std::uint16_t>(is);
    const double v = read_raw<double>(is);
    field.set(idx, v);
  }
  return field;
}

void export_energies_csv(const CoefficientSource& field, double p, double s,
                         const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "j,A_j\n";
  const auto a = per_scale_energy(field, p, s);
  os.precision(17);
  for (int j = 1; j < static_cast<int>(a.size()); ++j) os << j << "," << a[j] << "\n";
}

}  // namespace besov
