#pragma once

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

enum class ExtractorKind { fft, lpc, minmax };

inline std::string to_string(ExtractorKind k) {
  switch (k) {
    case ExtractorKind::fft: return "fft";
    case ExtractorKind::lpc: return "lpc";
    case ExtractorKind::minmax: return "minmax";
  }
  return "fft";
}

struct FeatureVector {
  std::vector<double> values;
  ExtractorKind extractor = ExtractorKind::fft;

  std::size_t dim() const noexcept { return values.size(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct ExtractorSpec {
  ExtractorKind kind = ExtractorKind::fft;
  int fft_window = 1024;
  int fft_dim = 512;
  int lpc_order = 20;
  int minmax_dim = 4;

  void check() const {
    if (fft_window < 2 || fft_dim < 1 || fft_dim > fft_window / 2) {
      throw ConfigError("FFT features need 1 <= dim <= window/2");
    }
    if (lpc_order < 1) throw ConfigError("LPC order must be >= 1");
    if (minmax_dim != 2 && minmax_dim != 4) throw ConfigError("min-max dimension must be 2 or 4");
  }

  friend bool operator==(const ExtractorSpec&, const ExtractorSpec&) = default;
};

/// Mean magnitude spectrum over non-overlapping windows. The last window is
/// zero-padded; an empty signal counts as one silent window.
inline FeatureVector extract_fft(const Signal& s, int window = 1024, int d = 512) {
  if (window < 2 || d < 1 || d > window / 2) throw ConfigError("FFT features need 1 <= d <= window/2");
  const auto w = static_cast<std::size_t>(window);
  const std::size_t windows = std::max<std::size_t>(1, (s.samples.size() + w - 1) / w);
  std::vector<double> acc(w / 2, 0.0);
  std::vector<dft::Complex> frame(w);
  for (std::size_t f = 0; f < windows; ++f) {
    std::fill(frame.begin(), frame.end(), dft::Complex{});
    const std::size_t begin = f * w;
    const std::size_t end = std::min(s.samples.size(), begin + w);
    for (std::size_t i = begin; i < end; ++i) frame[i - begin] = s.samples[i];
    const auto spec = dft::forward(std::span<const dft::Complex>(frame));
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::abs(spec[k]);
  }
  FeatureVector v{std::vector<double>(static_cast<std::size_t>(d)), ExtractorKind::fft};
  for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] = acc[k] / static_cast<double>(windows);
  return v;
}

/// r[k] = sum_n x[n] x[n-k] over the whole signal, k = 0..max_lag.
inline std::vector<double> autocorrelation(std::span<const double> x, int max_lag) {
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (std::size_t k = 0; k < r.size() && k < x.size(); ++k) {
    double acc = 0.0;
    for (std::size_t n = k; n < x.size(); ++n) acc += x[n] * x[n - k];
    r[k] = acc;
  }
  return r;
}

struct LpcSolution {
  std::vector<double> coefficients;  // x[n] ~ sum_k a[k-1] x[n-k]
  std::vector<double> reflection;
  double error = 0.0;  // final prediction error power
};

/// Levinson-Durbin recursion on autocorrelation lags r[0..order].
/// Recursion halts once the prediction error vanishes (a perfectly
/// predictable signal); the remaining coefficients stay zero.
inline LpcSolution levinson_durbin(std::span<const double> r, int order) {
  if (order < 1) throw ConfigError("LPC order must be >= 1");
  if (r.size() < static_cast<std::size_t>(order) + 1) throw ConfigError("need order+1 autocorrelation lags");
  const auto p = static_cast<std::size_t>(order);
  LpcSolution sol;
  sol.coefficients.assign(p, 0.0);
  sol.reflection.assign(p, 0.0);
  sol.error = r[0];
  if (r[0] <= 0.0) return sol;

  std::vector<double> a(p + 1, 0.0), prev(p + 1, 0.0);
  for (std::size_t i = 1; i <= p; ++i) {
    if (sol.error <= r[0] * 1e-14) break;
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= a[j] * r[i - j];
    const double k = acc / sol.error;
    if (!std::isfinite(k)) throw NumericError("non-finite reflection coefficient in Levinson-Durbin");
    prev = a;
    a[i] = k;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] - k * prev[i - j];
    sol.reflection[i - 1] = k;
    sol.error *= (1.0 - k * k);
  }
  std::copy(a.begin() + 1, a.end(), sol.coefficients.begin());
  return sol;
}

inline FeatureVector extract_lpc(const Signal& s, int order = 20) {
  if (order < 1) throw ConfigError("LPC order must be >= 1");
  const auto r = autocorrelation(s.samples, order);
  FeatureVector v{std::vector<double>(static_cast<std::size_t>(order), 0.0), ExtractorKind::lpc};
  if (r[0] == 0.0) return v;
  v.values = levinson_durbin(r, order).coefficients;
  for (double c : v.values) {
    if (!std::isfinite(c)) throw NumericError("non-finite LPC coefficient");
  }
  return v;
}

/// d = 2: [min, max]; d = 4: [min, max, mean, rms].
inline FeatureVector extract_minmax(const Signal& s, int d = 4) {
  if (d != 2 && d != 4) throw ConfigError("min-max dimension must be 2 or 4");
  FeatureVector v{std::vector<double>(static_cast<std::size_t>(d), 0.0), ExtractorKind::minmax};
  if (s.samples.empty()) return v;
  const auto [lo, hi] = std::minmax_element(s.samples.begin(), s.samples.end());
  v.values[0] = *lo;
  v.values[1] = *hi;
  if (d == 4) {
    double sum = 0.0, sq = 0.0;
    for (double x : s.samples) {
      sum += x;
      sq += x * x;
    }
    const auto n = static_cast<double>(s.samples.size());
    v.values[2] = sum / n;
    v.values[3] = std::sqrt(sq / n);
  }
  return v;
}

inline FeatureVector extract(const Signal& s, const ExtractorSpec& spec) {
  spec.check();
  switch (spec.kind) {
    case ExtractorKind::fft: return extract_fft(s, spec.fft_window, spec.fft_dim);
    case ExtractorKind::lpc: return extract_lpc(s, spec.lpc_order);
    case ExtractorKind::minmax: return extract_minmax(s, spec.minmax_dim);
  }
  return {};
}

}  // namespace codewave
