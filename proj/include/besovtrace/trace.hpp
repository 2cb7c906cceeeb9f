#pragma once

#include <array>
#include <string>
#include <vector>

#include "besovtrace/field.hpp"
#include "besovtrace/wavelet.hpp"

namespace besov {

/// Coefficient field of a trace f_a on the d-dimensional slice x' = a, in the
/// mixed representation: a wavelet band (l in L^d) plus a scaling band
/// (l = 0^d) whose coefficients multiply pure scaling tensors.
class TraceField {
 public:
  TraceField() = default;
  TraceField(int d, int j_max, std::vector<double> offset);

  int dim() const { return dim_; }
  int max_scale() const { return j_max_; }
  const std::vector<double>& offset() const { return offset_; }

  void set(const CoeffIndex& idx, double value);  // l = 0 allowed
  void add(const CoeffIndex& idx, double value);
  double coeff(const CoeffIndex& idx) const;

  std::uint64_t nonzero_count() const;
  bool wavelet_band_empty() const;
  bool scaling_band_empty() const;

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

  /// Wavelet band viewed as a plain coefficient field (scaling band dropped).
  CoeffField wavelet_band(const BesovParams& params) const;

  /// Wrap a d-dimensional coefficient field as a trace field with empty
  /// scaling band (the regularity module consumes TraceFields).
  static TraceField from_field(const CoeffField& field);

 private:
  void validate(const CoeffIndex& idx) const;
  Block& block(int j, unsigned l);
  int dim_ = 1;
  int j_max_ = 0;
  std::vector<double> offset_;
  std::vector<std::map<unsigned, Block>> blocks_;
};

/// Per-scale periodized wavelet weights at the offset a: for each coordinate
/// of a and each type l' in {0,1}, the nonzero values of Psi^{l'}(2^j a_i - k')
/// over k' in Z_j. Shared by the trace operator and experiments.
struct OffsetWeights {
  // weights[i][l'] is a list of (k', value)
  std::vector<std::array<std::vector<std::pair<std::int64_t, double>>, 2>> weights;
  int j = 0;

  static OffsetWeights at(const WaveletSystem& system, const std::vector<double>& a, int j);
};

/// Trace coefficients d_lambda(a) of a D-dimensional wavelet-band source:
/// for l in L^d the sum runs over all l' in {0,1}^{d'}, for l = 0^d over
/// l' in L^{d'} only. Compact support keeps every lambda touching at most
/// (support_length+1)^{d'} source positions per l'.
TraceField trace(const CoefficientSource& source, const WaveletSystem& system,
                 const std::vector<double>& a, int d);

/// Pointwise evaluation of the traced series at x in [0,1)^d (both bands).
double reconstruct_trace_at(const TraceField& tf, const WaveletSystem& system,
                            const std::vector<double>& x);

/// |reconstruct_at(f,(x,a)) - reconstruct_trace_at(trace(f,a), x)|; an exact
/// finite-sum identity up to float roundoff.
double pointwise_consistency(const CoefficientSource& field, const WaveletSystem& system,
                             const std::vector<double>& a, const std::vector<double>& x);

/// Besov quasi-norm over both bands (the caracbesov formula with the sum over
/// l in L^d replaced by l in {0,1}^d).
double mixed_besov_norm(const TraceField& tf, double s, double p, double q);

// BCF1 with the offset header extension and a per-record band flag.
void save_trace_field(const TraceField& tf, const std::string& path);
TraceField load_trace_field(const std::string& path);

}  // namespace besov
