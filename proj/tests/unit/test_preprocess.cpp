#include <codewave/preprocess.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace codewave;

namespace {

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Zero-stuff, full convolution, decimate: the definition, step by step.
std::vector<double> upfirdn_oracle(const std::vector<double>& x, const std::vector<double>& f, std::size_t up,
                                   std::size_t down) {
  std::vector<double> stuffed(x.size() * up, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) stuffed[i * up] = x[i];
  std::vector<double> conv(stuffed.size() + f.size() - 1, 0.0);
  for (std::size_t m = 0; m < conv.size(); ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (j > m || m - j >= stuffed.size()) continue;
      acc += f[j] * stuffed[m - j];
    }
    conv[m] = acc;
  }
  std::vector<double> out;
  for (std::size_t m = 0; m < conv.size(); m += down) out.push_back(conv[m]);
  return out;
}

// One analysis level written directly from the definition: mirror the left
// edge (x[-i] = x[i]), convolve, keep even positions.
std::vector<double> sdwt_oracle(const std::vector<double>& x, const std::vector<double>& h) {
  const auto n = static_cast<long>(x.size());
  auto at = [&](long t) { return x[static_cast<std::size_t>(t < 0 ? -t : t)]; };
  std::vector<double> y;
  for (long k = 0; 2 * k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * at(2 * k - static_cast<long>(j));
    y.push_back(acc);
  }
  return y;
}

double energy(const std::vector<double>& v) {
  double e = 0;
  for (double x : v) e += x * x;
  return e;
}

}  // namespace

TEST(Wavelet, HaarCoefficients) {
  const auto w = WaveletSpec::make(WaveletName::haar);
  const double c = 1.0 / std::sqrt(2.0);
  EXPECT_EQ(w.low_pass, (std::vector<double>{c, c}));
  EXPECT_EQ(w.high_pass, (std::vector<double>{c, -c}));
}

TEST(Wavelet, QuadratureMirrorAndOrthonormality) {
  for (auto name : {WaveletName::haar, WaveletName::db2}) {
    const auto w = WaveletSpec::make(name);
    ASSERT_EQ(w.low_pass.size(), w.high_pass.size());
    const auto L = w.low_pass.size();
    double sum = 0, norm = 0, cross = 0;
    for (std::size_t k = 0; k < L; ++k) {
      EXPECT_DOUBLE_EQ(w.high_pass[k], (k % 2 ? -1.0 : 1.0) * w.low_pass[L - 1 - k]);
      sum += w.low_pass[k];
      norm += w.low_pass[k] * w.low_pass[k];
      cross += w.low_pass[k] * w.high_pass[k];
    }
    EXPECT_NEAR(sum, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_NEAR(cross, 0.0, 1e-12);
  }
}

TEST(Upfirdn, IdentityExactly) {
  std::mt19937_64 rng(1);
  const auto x = random_signal(rng, 37);
  const std::vector<double> one{1.0};
  EXPECT_EQ(upfirdn(x, one, 1, 1), x);
}

TEST(Upfirdn, ZeroStuffing) {
  const std::vector<double> x{2.5, -1.0};
  const std::vector<double> one{1.0};
  EXPECT_EQ(upfirdn(x, one, 2, 1), (std::vector<double>{2.5, 0.0, -1.0, 0.0}));
}

TEST(Upfirdn, MatchesThreeStepOracle) {
  std::mt19937_64 rng(2);
  const std::vector<double> ones{1, 1, 1};
  const auto x = random_signal(rng, 8);
  EXPECT_EQ(upfirdn(x, ones, 3, 2), upfirdn_oracle(x, ones, 3, 2));
  for (int trial = 0; trial < 100; ++trial) {
    const auto sig = random_signal(rng, 1 + rng() % 40);
    const auto f = random_signal(rng, 1 + rng() % 7);
    const std::size_t up = 1 + rng() % 4, down = 1 + rng() % 4;
    const auto got = upfirdn(sig, f, static_cast<int>(up), static_cast<int>(down));
    EXPECT_EQ(got, upfirdn_oracle(sig, f, up, down));
    EXPECT_EQ(got.size(), (sig.size() * up + f.size() - 1 + down - 1) / down);
  }
}

TEST(Upfirdn, RejectsBadArguments) {
  const std::vector<double> x{1.0}, f{1.0}, none;
  EXPECT_THROW(upfirdn(x, f, 0, 1), ConfigError);
  EXPECT_THROW(upfirdn(x, f, 1, 0), ConfigError);
  EXPECT_THROW(upfirdn(x, none, 1, 1), ConfigError);
}

TEST(Sdwt, HaarOnConstant) {
  const auto w = WaveletSpec::make(WaveletName::haar);
  const std::vector<double> x{1, 1, 1, 1};
  const auto r = sdwt(x, w, 1);
  ASSERT_EQ(r.samples.size(), 2u);
  EXPECT_NEAR(r.samples[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(r.samples[1], std::sqrt(2.0), 1e-15);
  EXPECT_FALSE(r.too_short);
}

TEST(Sdwt, HaarOnAlternatingIsDetailOnly) {
  const auto w = WaveletSpec::make(WaveletName::haar);
  const std::vector<double> x{1, -1, 1, -1};
  const auto level = sdwt_level(x, w);
  // Position 0 sees the mirrored x[1] = -1 next to x[0] = 1.
  for (double a : level.approximation) EXPECT_NEAR(a, 0.0, 1e-15);
}

TEST(Sdwt, ConstantSignalsHaveNoDetailEnergy) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto w = WaveletSpec::make(WaveletName::haar);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x(2 + rng() % 100, u(rng));
    EXPECT_LT(energy(sdwt_level(x, w).detail), 1e-12);
  }
}

TEST(Sdwt, MatchesDirectConvolutionOracle) {
  std::mt19937_64 rng(4);
  for (auto name : {WaveletName::haar, WaveletName::db2}) {
    const auto w = WaveletSpec::make(name);
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = random_signal(rng, w.low_pass.size() + rng() % 70);
      const auto level = sdwt_level(x, w);
      EXPECT_EQ(level.approximation, sdwt_oracle(x, w.low_pass));
      EXPECT_EQ(level.detail, sdwt_oracle(x, w.high_pass));
    }
  }
}

TEST(Sdwt, Db2On64SamplesWithinTolerance) {
  std::mt19937_64 rng(5);
  const auto w = WaveletSpec::make(WaveletName::db2);
  const auto x = random_signal(rng, 64);
  const auto got = sdwt(x, w, 1).samples;
  const auto want = sdwt_oracle(x, w.low_pass);
  ASSERT_EQ(got.size(), 32u);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
}

TEST(Sdwt, LevelsHalveLength) {
  std::mt19937_64 rng(6);
  const auto w = WaveletSpec::make(WaveletName::haar);
  const auto x = random_signal(rng, 100);
  const auto r = sdwt(x, w, 3);
  EXPECT_EQ(r.levels_applied, 3);
  EXPECT_EQ(r.samples.size(), 13u);  // 100 -> 50 -> 25 -> 13
}

TEST(Sdwt, ShortSignalReturnedUnchangedWithFlag) {
  const auto w = WaveletSpec::make(WaveletName::db2);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto r = sdwt(x, w, 1);
  EXPECT_TRUE(r.too_short);
  EXPECT_EQ(r.levels_applied, 0);
  EXPECT_EQ(r.samples, x);
  EXPECT_THROW(sdwt(x, w, 0), ConfigError);
}

TEST(LowPass, RemovesToneAboveCutoff) {
  const std::size_t n = 256;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2 * std::numbers::pi * (n / 4.0) * t / n);
  // Bin N/4 = 64 lies above floor(0.25 * 256 / 2) = 32.
  EXPECT_LT(energy(fft_low_pass(x, 0.25)), 1e-6 * energy(x));
}

TEST(LowPass, KeepsConstant) {
  const std::vector<double> x(128, 0.5);
  for (double y : fft_low_pass(x, 0.25)) EXPECT_NEAR(y, 0.5, 1e-9);
}

TEST(LowPass, EmptyAndFullBand) {
  EXPECT_TRUE(fft_low_pass(std::vector<double>{}, 0.25).empty());
  std::mt19937_64 rng(7);
  const auto x = random_signal(rng, 77);
  const auto y = fft_low_pass(x, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-9);
  EXPECT_THROW(fft_low_pass(x, 0.0), ConfigError);
  EXPECT_THROW(fft_low_pass(x, 1.5), ConfigError);
}

TEST(LowPass, NoEnergyAboveCutoff) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 64u << (rng() % 3);
    const auto x = random_signal(rng, n);
    const double cutoff = 0.1 + 0.8 * (rng() % 100) / 100.0;
    const auto spectrum = dft::forward(std::span<const double>(fft_low_pass(x, cutoff)));
    const auto keep = static_cast<std::size_t>(std::floor(cutoff * n / 2.0));
    for (std::size_t k = 0; k < n; ++k) {
      if (std::min(k, n - k) > keep) {
        EXPECT_LT(std::abs(spectrum[k]), 1e-9) << k;
      }
    }
  }
}

TEST(Preprocess, RawIsIdentity) {
  std::mt19937_64 rng(9);
  Signal s;
  s.samples = random_signal(rng, 50);
  EXPECT_EQ(preprocess(s, FilterSpec{}).samples, s.samples);
}

TEST(Preprocess, LowPassKeepsDc) {
  Signal s;
  s.samples.assign(64, 0.3);
  FilterSpec spec;
  spec.kind = FilterKind::fft_low;
  for (double y : preprocess(s, spec).samples) EXPECT_NEAR(y, 0.3, 1e-9);
}

TEST(Preprocess, SdwtRenormalizesOverUnit) {
  Signal s;
  s.samples = {1, 1, 1, 1};
  FilterSpec spec;
  spec.kind = FilterKind::sdwt;
  const auto out = preprocess(s, spec).samples;
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
}

TEST(Preprocess, OutputStaysInUnitRange) {
  std::mt19937_64 rng(10);
  for (auto kind : {FilterKind::norm, FilterKind::fft_low, FilterKind::sdwt}) {
    for (int trial = 0; trial < 20; ++trial) {
      Signal s;
      s.samples = random_signal(rng, 8 + rng() % 300);
      FilterSpec spec;
      spec.kind = kind;
      spec.wavelet = trial % 2 ? WaveletName::db2 : WaveletName::haar;
      spec.levels = 1 + trial % 3;
      for (double y : preprocess(s, spec).samples) {
        EXPECT_LE(y, 1.0);
        EXPECT_GE(y, -1.0);
      }
    }
  }
}

TEST(Preprocess, InvalidSpecIsConfigError) {
  FilterSpec spec;
  spec.kind = FilterKind::sdwt;
  spec.levels = 0;
  EXPECT_THROW(preprocess(Signal{}, spec), ConfigError);
}
