#pragma once

// Thin FFTW wrapper. Plans are created once per (size, direction) and shared;
// plan creation is serialized, execution is reentrant.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace codewave::dft {

using Complex = std::complex<double>;

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline fftw_plan plan_for(std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, int>, PlanHandle> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, sign}];
  if (!slot) {
    std::vector<Complex> in(n), out(n);
    slot.reset(fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED));
  }
  return slot.get();
}

inline std::vector<Complex> execute(std::span<const Complex> input, int sign) {
  std::vector<Complex> in(input.begin(), input.end());
  std::vector<Complex> out(input.size());
  if (input.empty()) return out;
  fftw_execute_dft(plan_for(input.size(), sign), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace detail

/// X[k] = sum_n x[n] e^{-2 pi i k n / N}, unnormalized.
inline std::vector<Complex> forward(std::span<const Complex> x) { return detail::execute(x, FFTW_FORWARD); }

inline std::vector<Complex> forward(std::span<const double> x) {
  std::vector<Complex> c(x.begin(), x.end());
  return forward(std::span<const Complex>(c));
}

/// Inverse transform including the 1/N factor, so inverse(forward(x)) == x.
inline std::vector<Complex> inverse(std::span<const Complex> spectrum) {
  auto out = detail::execute(spectrum, FFTW_BACKWARD);
  const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace codewave::dft
