#pragma once

// Signal conditioning ahead of feature extraction: identity, peak
// normalization, FFT low-pass, and approximation-only wavelet filtering.

#include <codewave/dft.hpp>
#include <codewave/error.hpp>
#include <codewave/signal.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace codewave {

enum class WaveletName { haar, db2 };

/// Orthogonal two-channel filter bank. The high-pass filter is the
/// quadrature mirror of the low-pass one: g[k] = (-1)^k h[L-1-k].
struct WaveletSpec {
  WaveletName name = WaveletName::haar;
  std::vector<double> low_pass;
  std::vector<double> high_pass;

  static WaveletSpec make(WaveletName name) {
    WaveletSpec w;
    w.name = name;
    if (name == WaveletName::haar) {
      const double c = 1.0 / std::sqrt(2.0);
      w.low_pass = {c, c};
    } else {
      const double s3 = std::sqrt(3.0);
      const double d = 4.0 * std::sqrt(2.0);
      w.low_pass = {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
    }
    const auto len = w.low_pass.size();
    w.high_pass.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
      w.high_pass[k] = (k % 2 == 0 ? 1.0 : -1.0) * w.low_pass[len - 1 - k];
    }
    return w;
  }
};

inline std::string to_string(WaveletName n) { return n == WaveletName::haar ? "haar" : "db2"; }

enum class FilterKind { raw, norm, fft_low, sdwt };

struct FilterSpec {
  FilterKind kind = FilterKind::raw;
  double cutoff_fraction = 0.25;  // fft_low
  WaveletName wavelet = WaveletName::haar;  // sdwt
  int levels = 1;  // sdwt

  void check() const {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0)) {
      throw ConfigError("low-pass cutoff fraction must lie in (0, 1]");
    }
    if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  }

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Zero-stuff by `up`, full convolution with `filter`, keep every `down`-th
/// sample from index 0. Output length is ceil((n*up + L - 1) / down).
inline std::vector<double> upfirdn(std::span<const double> x, std::span<const double> filter, int up, int down) {
  if (up < 1 || down < 1) throw ConfigError("upfirdn factors must be >= 1");
  if (filter.empty()) throw ConfigError("upfirdn filter must be non-empty");
  const auto u = static_cast<std::size_t>(up);
  const auto d = static_cast<std::size_t>(down);
  const std::size_t stuffed = x.size() * u;
  const std::size_t full = stuffed + filter.size() - 1;
  std::vector<double> y((full + d - 1) / d, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t m = i * d;
    double acc = 0.0;
    // Only taps landing on a non-stuffed sample contribute.
    for (std::size_t j = 0; j < filter.size() && j <= m; ++j) {
      const std::size_t z = m - j;
      if (z >= stuffed || z % u != 0) continue;
      acc += filter[j] * x[z / u];
    }
    y[i] = acc;
  }
  return y;
}

struct WaveletLevel {
  std::vector<double> approximation;
  std::vector<double> detail;
};

/// One analysis level. Convolution runs over the signal extended on the left
/// by whole-sample mirroring (x[-i] = x[i]); even-indexed outputs are kept,
/// ceil(n/2) of them. Requires n >= filter length.
inline WaveletLevel sdwt_level(std::span<const double> x, const WaveletSpec& w) {
  const std::size_t len = w.low_pass.size();
  const std::size_t n = x.size();
  // Even-sized left pad keeps the decimation phase on the original even
  // indices. Slot 0 of an odd-L pad is never read by any kept output.
  const std::size_t pad = len % 2 == 0 ? len : len + 1;
  std::vector<double> ext(pad + n, 0.0);
  for (std::size_t i = 1; i <= pad && i < n; ++i) ext[pad - i] = x[i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto lo = upfirdn(ext, w.low_pass, 1, 2);
  const auto hi = upfirdn(ext, w.high_pass, 1, 2);
  const std::size_t first = pad / 2;
  const std::size_t count = (n + 1) / 2;
  WaveletLevel out;
  out.approximation.assign(lo.begin() + static_cast<std::ptrdiff_t>(first),
                           lo.begin() + static_cast<std::ptrdiff_t>(first + count));
  out.detail.assign(hi.begin() + static_cast<std::ptrdiff_t>(first),
                    hi.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

struct SdwtResult {
  std::vector<double> samples;
  int levels_applied = 0;
  bool too_short = false;  // stopped early: input shorter than the filter
};

/// Separating DWT: keeps only the approximation branch at every level.
inline SdwtResult sdwt(std::span<const double> x, const WaveletSpec& w, int levels) {
  if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  SdwtResult r;
  r.samples.assign(x.begin(), x.end());
  for (int l = 0; l < levels; ++l) {
    if (r.samples.size() < w.low_pass.size()) {
      r.too_short = true;
      break;
    }
    r.samples = sdwt_level(r.samples, w).approximation;
    ++r.levels_applied;
  }
  return r;
}

/// Zero-pads to a power of two, zeroes every bin whose distance from DC
/// exceeds floor(cutoff * N / 2), transforms back and truncates.
inline std::vector<double> fft_low_pass(std::span<const double> x, double cutoff_fraction) {
  if (!(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0)) {
    throw ConfigError("low-pass cutoff fraction must lie in (0, 1]");
  }
  if (x.empty()) return {};
  const std::size_t n = dft::next_pow2(x.size());
  std::vector<dft::Complex> padded(n);
  std::copy(x.begin(), x.end(), padded.begin());
  auto spectrum = dft::forward(std::span<const dft::Complex>(padded));
  const auto keep = static_cast<std::size_t>(std::floor(cutoff_fraction * static_cast<double>(n) / 2.0));
  for (std::size_t k = 0; k < n; ++k) {
    if (std::min(k, n - k) > keep) spectrum[k] = 0.0;
  }
  const auto back = dft::inverse(spectrum);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = back[i].real();
  return y;
}

namespace detail {

// Filters may push samples past the unit range; round-off spill is clamped,
// anything larger renormalizes.
inline void bound_to_unit(std::vector<double>& v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  if (peak <= 1.0) return;
  if (peak - 1.0 < 1e-12) {
    for (double& x : v) x = std::clamp(x, -1.0, 1.0);
  } else {
    for (double& x : v) x /= peak;
  }
}

}  // namespace detail

inline Signal preprocess(Signal s, const FilterSpec& spec) {
  spec.check();
  switch (spec.kind) {
    case FilterKind::raw:
      return s;
    case FilterKind::norm:
      return normalize(std::move(s));
    case FilterKind::fft_low:
      s.samples = fft_low_pass(s.samples, spec.cutoff_fraction);
      break;
    case FilterKind::sdwt:
      s.samples = sdwt(s.samples, WaveletSpec::make(spec.wavelet), spec.levels).samples;
      break;
  }
  detail::bound_to_unit(s.samples);
  return s;
}

}  // namespace codewave
