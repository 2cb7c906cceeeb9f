#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "besovtrace/common.hpp"
#include "besovtrace/wavelet.hpp"

namespace besov {

/// Multiscale index (j, k, l): scale j >= 1, position k in {0..2^j-1}^dim,
/// type l a bitmask over coordinates (bit i set = Psi^1 in coordinate i).
/// Wavelet-band indices of a dim-dimensional field have l != 0; l = 0 appears
/// only in the scaling band of traces.
struct CoeffIndex {
  int j = 1;
  std::vector<std::int64_t> k;
  unsigned l = 0;

  int dim() const { return static_cast<int>(k.size()); }
};

/// Besov smoothness parameters (s, p, q) attached to a dim-dimensional field.
/// q = infinity is allowed and handled as a sup.
struct BesovParams {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
  int dim = 1;

  bool q_is_inf() const { return std::isinf(q); }
};

/// Irreducible representation (J, K) of the dyadic point k 2^-j: the unique
/// J <= j with K = k / 2^{j-J} having at least one odd coordinate. The zero
/// vector has no irreducible form; it is reported as J = 0 with a flag.
struct IrreducibleIndex {
  int J = 0;
  std::vector<std::int64_t> K;
  bool zero_flagged = false;
};

IrreducibleIndex irreducible(int j, const std::vector<std::int64_t>& k);

// linearized k (coordinate 0 in the low bits), valid while dim*j <= 62
std::uint64_t encode_position(const std::vector<std::int64_t>& k, int j);
std::vector<std::int64_t> decode_position(std::uint64_t code, int j, int dim);

/// Read interface shared by materialized fields, lazy random fields and
/// probe fields: a coefficient for every wavelet-band index (0 when absent).
class CoefficientSource {
 public:
  virtual ~CoefficientSource() = default;
  virtual int dim() const = 0;
  virtual int max_scale() const = 0;
  virtual double coeff(const CoeffIndex& idx) const = 0;
  /// sum_{k,l} |c|^p at scale j; the default enumerates densely (oracle-grade,
  /// exponential in dim*j) and concrete sources override with exact fast paths.
  virtual double scale_power_sum(int j, double p) const;
};

/// Sparse-canonical coefficient storage for one band (j, l). Dense arrays are
/// used when the fill ratio crosses 1/4 and the domain is small enough.
class Block {
 public:
  Block() = default;
  explicit Block(std::uint64_t domain_size, bool dense_hint = false);

  void set(std::uint64_t pos, double value);  // value 0 erases
  void add(std::uint64_t pos, double value);
  double get(std::uint64_t pos) const;
  std::uint64_t nonzero_count() const;
  std::uint64_t domain_size() const { return domain_; }

  template <typename F>
  void for_each(F&& f) const {  // sorted by position, nonzeros only
    if (is_dense_) {
      for (std::uint64_t i = 0; i < dense_.size(); ++i) {
        if (dense_[i] != 0.0) f(i, dense_[i]);
      }
    } else {
      for (const auto& [pos, v] : sparse_) {
        if (v != 0.0) f(pos, v);
      }
    }
  }

 private:
  void maybe_densify();
  std::uint64_t domain_ = 0;
  bool is_dense_ = false;
  std::vector<double> dense_;
  std::map<std::uint64_t, double> sparse_;
};

/// Materialized wavelet-band coefficient field on the torus, scales 1..j_max.
class CoeffField : public CoefficientSource {
 public:
  CoeffField() = default;
  CoeffField(int dim, int j_max, BesovParams params);

  int dim() const override { return dim_; }
  int max_scale() const override { return j_max_; }
  const BesovParams& params() const { return params_; }

  void set(const CoeffIndex& idx, double value);
  void add(const CoeffIndex& idx, double value);
  double coeff(const CoeffIndex& idx) const override;
  double scale_power_sum(int j, double p) const override;

  std::uint64_t nonzero_count() const;

  /// Visit nonzero entries of scale j in canonical (l, position) order.
  template <typename F>
  void for_each_at_scale(int j, F&& f) const {
    if (j < 1 || j > j_max_) return;
    for (const auto& [l, block] : blocks_[j]) {
      const unsigned l_copy = l;
      block.for_each([&](std::uint64_t pos, double v) {
        f(CoeffIndex{j, decode_position(pos, j, dim_), l_copy}, v);
      });
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (int j = 1; j <= j_max_; ++j) for_each_at_scale(j, f);
  }

  CoeffField& operator*=(double t);
  friend CoeffField operator+(const CoeffField& a, const CoeffField& b);

 private:
  void validate(const CoeffIndex& idx) const;
  Block& block(int j, unsigned l);
  int dim_ = 1;
  int j_max_ = 0;
  BesovParams params_;
  // blocks_[j][l]; index 0 unused
  std::vector<std::map<unsigned, Block>> blocks_;
};

/// Lazy Rademacher field: c_lambda = xi_lambda j^{-(2/q+delta)} 2^{-sj} with
/// xi = +-1 keyed on (seed, lambda). Same law as synthesize_random_field but
/// evaluable at any index without materialization.
class RademacherField : public CoefficientSource {
 public:
  RademacherField(BesovParams params, int j_max, std::uint64_t seed, double delta = 0.01);
  int dim() const override { return params_.dim; }
  int max_scale() const override { return j_max_; }
  double coeff(const CoeffIndex& idx) const override;
  double scale_power_sum(int j, double p) const override;
  double amplitude(int j) const;
  const BesovParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

 private:
  BesovParams params_;
  int j_max_ = 0;
  std::uint64_t seed_ = 0;
  double delta_ = 0.01;
};

/// Besov quasi-norm from the wavelet characterization:
/// ( sum_j (2^{(sp-dim)j} sum_{k,l} |c|^p)^{q/p} )^{1/q}, sup over j for q = inf.
double besov_quasinorm(const CoefficientSource& field, const BesovParams& params);

/// Per-scale energies A_j = 2^{j(sp-dim)} sum_{k,l} |c|^p for j = 1..j_max.
std::vector<double> per_scale_energy(const CoefficientSource& field, double p, double s);

struct EmbeddingCheck {
  double norm_q_prime = 0.0;      // ||f||_{s,p,q'}
  double norm_q = 0.0;            // ||f||_{s,p,q}
  double norm_eps_down = 0.0;     // ||f||_{s-eps,p,q}
  double embedding_constant = 0;  // c with ||f||_{s-eps,p,q} <= c ||f||_{s,p,q'}
  bool first_inequality = false;  // ||f||_{s,p,q'} <= ||f||_{s,p,q}
  bool second_inequality = false; // ||f||_{s-eps,p,q} <= c ||f||_{s,p,q'}
};

/// Verifies the chain B^s_{p,q} -> B^s_{p,q'} -> B^{s-eps}_{p,q} on a field.
EmbeddingCheck embedding_check(const CoefficientSource& field, double s, double p, double q,
                               double q_prime, double eps);

/// Materialized draw of the Rademacher law (dense storage). Guarded against
/// absurd sizes; experiments at large j_max use RademacherField directly.
CoeffField synthesize_random_field(const BesovParams& params, int j_max, std::uint64_t seed,
                                   double delta = 0.01);

/// Pointwise reconstruction sum c_lambda Psi_lambda(x) of the truncated series
/// at a point of [0,1)^dim, using periodized tensor wavelets.
double reconstruct_at(const CoefficientSource& field, const WaveletSystem& system,
                      const std::vector<double>& point);

// BCF1 file format.
void save_field(const CoeffField& field, const std::string& path);
CoeffField load_field(const std::string& path);
void export_energies_csv(const CoefficientSource& field, double p, double s,
                         const std::string& path);

}  // namespace besov
