#pragma once

#include <codewave/detail/atomic_write.hpp>
#include <codewave/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace codewave {

/// File bytes read as a PCM-like amplitude sequence. Each sample is one
/// sliding window of `ngram` bytes taken as a big-endian two's-complement
/// integer and scaled into [-1, 1).
struct Signal {
  std::vector<double> samples;
  std::string source;
  int ngram = 2;
  double nominal_rate = 8000.0;  // axis labelling only

  friend bool operator==(const Signal&, const Signal&) = default;
};

inline void check_ngram(int ngram) {
  if (ngram < 1 || ngram > 3) throw ConfigError("n-gram size must be 1, 2 or 3, got " + std::to_string(ngram));
}

inline Signal signal_from_bytes(std::span<const std::uint8_t> bytes, int ngram, std::string source = {}) {
  check_ngram(ngram);
  Signal s;
  s.source = std::move(source);
  s.ngram = ngram;
  const auto n = static_cast<std::size_t>(ngram);
  if (bytes.size() < n) return s;

  const double scale = std::ldexp(1.0, 8 * ngram - 1);
  const std::int64_t wrap = std::int64_t{1} << (8 * ngram);
  const std::int64_t half = wrap / 2;
  s.samples.resize(bytes.size() - n + 1);
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    std::int64_t v = 0;
    for (std::size_t k = 0; k < n; ++k) v = (v << 8) | bytes[i + k];
    if (v >= half) v -= wrap;
    s.samples[i] = static_cast<double>(v) / scale;
  }
  return s;
}

inline Signal signal_from_bytes(std::string_view bytes, int ngram, std::string source = {}) {
  return signal_from_bytes(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()), ngram,
      std::move(source));
}

inline Signal load_signal(const std::filesystem::path& file, int ngram) {
  check_ngram(ngram);
  return signal_from_bytes(detail::read_file(file), ngram, file.generic_string());
}

/// Scales by the peak magnitude; silent or empty signals pass through.
inline Signal normalize(Signal s) {
  double peak = 0.0;
  for (double x : s.samples) peak = std::max(peak, std::abs(x));
  if (peak > 0.0 && peak != 1.0) {
    for (double& x : s.samples) x /= peak;
  }
  return s;
}

}  // namespace codewave
