#include <codewave/classify.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace codewave;

namespace {

WeaknessClass cls(const std::string& id) { return WeaknessClass::from_id(id); }

FeatureVector fv(std::vector<double> v) { return FeatureVector{std::move(v), ExtractorKind::fft}; }

MetricSpec metric(MetricKind k, double p = 3, double t = 1e-4) { return MetricSpec{k, p, t}; }

double dist(std::vector<double> a, std::vector<double> b, const MetricSpec& m) {
  return distance(std::span<const double>(a), std::span<const double>(b), m);
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<double> v(d);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(dist({0, 0}, {3, 4}, metric(MetricKind::eucl)), 5.0);
  EXPECT_DOUBLE_EQ(dist({1, 2}, {4, 0}, metric(MetricKind::cheb)), 3.0);
  EXPECT_NEAR(dist({0}, {2}, metric(MetricKind::mink, 3)), 2.0, 1e-15);
  EXPECT_NEAR(dist({1, -2, 3}, {2, -4, 6}, metric(MetricKind::cos)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(dist({0, 0, 0}, {1, 0.4, 2}, metric(MetricKind::hamming, 3, 0.5)), 2.0);
  EXPECT_DOUBLE_EQ(dist({0, 0, 0}, {1, 0.4, 2}, metric(MetricKind::diff, 3, 0.5)), 3.0);
}

TEST(Distance, CosineWithZeroVectorIsOne) {
  EXPECT_DOUBLE_EQ(dist({0, 0}, {1, 2}, metric(MetricKind::cos)), 1.0);
  EXPECT_DOUBLE_EQ(dist({0, 0}, {0, 0}, metric(MetricKind::cos)), 1.0);
}

TEST(Distance, DiffDegeneratesToL1AtZeroTolerance) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_vector(rng, 5), b = random_vector(rng, 5);
    double l1 = 0;
    for (int i = 0; i < 5; ++i) l1 += std::abs(a[i] - b[i]);
    EXPECT_NEAR(dist(a, b, metric(MetricKind::diff, 3, 0.0)), l1, 1e-12);
    EXPECT_NEAR(dist(a, b, metric(MetricKind::mink, 1.0)), l1, 1e-12);
  }
}

TEST(Distance, DimensionMismatchIsConfigError) {
  EXPECT_THROW(dist({1, 2}, {1}, metric(MetricKind::eucl)), ConfigError);
  EXPECT_THROW(dist({1}, {1}, metric(MetricKind::mink, 0.5)), ConfigError);
  EXPECT_THROW(dist({1}, {1}, metric(MetricKind::diff, 3, -1)), ConfigError);
}

TEST(Distance, MetricAxioms) {
  std::mt19937_64 rng(2);
  for (auto kind : {MetricKind::eucl, MetricKind::cheb, MetricKind::mink}) {
    const auto m = metric(kind, 3);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t d = 1 + rng() % 8;
      const auto a = random_vector(rng, d), b = random_vector(rng, d), c = random_vector(rng, d);
      const double ab = dist(a, b, m), ba = dist(b, a, m), ac = dist(a, c, m), cb = dist(c, b, m);
      EXPECT_GE(ab, 0.0);
      EXPECT_EQ(ab, ba);
      EXPECT_LE(dist(a, a, m), 1e-12);
      EXPECT_LE(ab, ac + cb + 1e-9);
    }
  }
}

TEST(Train, MeanCentroid) {
  const auto ts = train({{cls("CWE-1"), fv({0, 2})}, {cls("CWE-1"), fv({2, 0})}}, ClusterKind::mean, "h");
  EXPECT_EQ(ts.classes.at(cls("CWE-1")).centroid, (std::vector<double>{1, 1}));
  EXPECT_EQ(ts.classes.at(cls("CWE-1")).count, 2u);
}

TEST(Train, MedianCentroidIsRobust) {
  const auto ts =
      train({{cls("CWE-1"), fv({0})}, {cls("CWE-1"), fv({0})}, {cls("CWE-1"), fv({9})}}, ClusterKind::median, "h");
  EXPECT_EQ(ts.classes.at(cls("CWE-1")).centroid, std::vector<double>{0});
}

TEST(Train, SingleVectorIsItsOwnCentroid) {
  const auto ts = train({{cls("CWE-1"), fv({0.3, -7})}, {cls("CWE-2"), fv({1, 1})}}, ClusterKind::mean, "h");
  EXPECT_EQ(ts.classes.at(cls("CWE-1")).centroid, (std::vector<double>{0.3, -7}));
}

TEST(Train, Errors) {
  EXPECT_THROW(train({}, ClusterKind::mean, "h"), ConfigError);
  EXPECT_THROW(train({{cls("CWE-1"), fv({1})}, {cls("CWE-2"), fv({1, 2})}}, ClusterKind::mean, "h"), ConfigError);
  EXPECT_THROW(train({{cls("CWE-1"), fv({1})}}, ClusterKind::mean, ""), ConfigError);
}

TEST(Train, OrderIndependentExactly) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabeledVector> data;
    for (int i = 0; i < 20; ++i) data.push_back({cls("CWE-" + std::to_string(rng() % 3)), fv(random_vector(rng, 4))});
    auto shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto kind : {ClusterKind::mean, ClusterKind::median}) {
      EXPECT_EQ(train(data, kind, "h"), train(shuffled, kind, "h"));
    }
  }
}

TEST(Classify, OwnCentroidRanksFirstWithZero) {
  const auto ts = train({{cls("CWE-1"), fv({1, 2})}, {cls("CWE-2"), fv({5, 5})}}, ClusterKind::mean, "h");
  for (auto kind : {MetricKind::eucl, MetricKind::cheb, MetricKind::mink, MetricKind::diff, MetricKind::hamming}) {
    const auto r = classify(fv({1, 2}), ts, metric(kind));
    EXPECT_EQ(r.ranked[0].label.id(), "CWE-1");
    EXPECT_EQ(r.ranked[0].score, 0.0);
  }
}

TEST(Classify, TiesBreakByClassId) {
  const auto ts = train({{cls("CWE-20"), fv({1})}, {cls("CWE-119"), fv({-1})}}, ClusterKind::mean, "h");
  const auto r = classify(fv({0}), ts, metric(MetricKind::eucl));
  EXPECT_EQ(r.ranked[0].label.id(), "CWE-119");
  EXPECT_EQ(r.ranked[1].label.id(), "CWE-20");
}

TEST(Classify, MatchesBruteForceRanking) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledVector> data;
    for (int c = 0; c < 3; ++c) data.push_back({cls("CWE-" + std::to_string(c + 1)), fv(random_vector(rng, 3))});
    const auto ts = train(data, ClusterKind::mean, "h");
    const auto v = random_vector(rng, 3);
    const auto m = metric(static_cast<MetricKind>(rng() % 6));
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& [label, f] : data) brute.push_back({dist(v, f.values, m), label.id()});
    std::sort(brute.begin(), brute.end());
    const auto r = classify(fv(v), ts, m);
    ASSERT_EQ(r.ranked.size(), 3u);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(r.ranked[i].label.id(), brute[i].second);
      EXPECT_EQ(r.ranked[i].score, brute[i].first);
    }
    for (int i = 1; i < 3; ++i) EXPECT_LE(r.ranked[i - 1].score, r.ranked[i].score);
  }
}

TEST(Classify, DimensionMismatchAndEmptySet) {
  const auto ts = train({{cls("CWE-1"), fv({1, 2})}}, ClusterKind::mean, "h");
  EXPECT_THROW(classify(fv({1}), ts, metric(MetricKind::eucl)), ConfigError);
  EXPECT_THROW(classify(fv({1}), TrainingSet{}, metric(MetricKind::eucl)), ConfigError);
}

TEST(Container, RoundTripsBitExactly) {
  std::mt19937_64 rng(5);
  std::vector<LabeledVector> data;
  for (const char* id : {"CVE-2009-2562", "CWE-119", "NVD-CWE-Other"}) data.push_back({cls(id), fv(random_vector(rng, 7))});
  const auto ts = train(data, ClusterKind::median, "-raw -fft");
  const auto bytes = serialize(ts);
  EXPECT_EQ(bytes.substr(0, 4), "CWTS");
  EXPECT_EQ(deserialize_training_set(bytes), ts);
  EXPECT_EQ(serialize(deserialize_training_set(bytes)), bytes);
}

TEST(Container, RejectsCorruption) {
  const auto ts = train({{cls("CWE-1"), fv({1, 2})}}, ClusterKind::mean, "h");
  const auto bytes = serialize(ts);
  EXPECT_THROW(deserialize_training_set("XXXX" + bytes.substr(4)), ParseError);
  EXPECT_THROW(deserialize_training_set(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(deserialize_training_set(bytes + "x"), ParseError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(deserialize_training_set(bad_version), ParseError);
}
