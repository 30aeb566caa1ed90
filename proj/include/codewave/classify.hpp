#pragma once

// Per-class centroid models and distance-ranked classification.

#include <codewave/corpus_index.hpp>
#include <codewave/detail/binary_io.hpp>
#include <codewave/error.hpp>
#include <codewave/features.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace codewave {

enum class MetricKind { eucl, cheb, mink, cos, hamming, diff };

inline std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::eucl: return "eucl";
    case MetricKind::cheb: return "cheb";
    case MetricKind::mink: return "mink";
    case MetricKind::cos: return "cos";
    case MetricKind::hamming: return "hamming";
    case MetricKind::diff: return "diff";
  }
  return "cheb";
}

struct MetricSpec {
  MetricKind kind = MetricKind::cheb;
  double p = 3.0;            // mink
  double tolerance = 1e-4;   // hamming, diff

  void check() const {
    if (!(p >= 1.0)) throw ConfigError("Minkowski order must be >= 1");
    if (!(tolerance >= 0.0)) throw ConfigError("distance tolerance must be >= 0");
  }

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

/// Every measure is expressed as a distance: smaller is more similar.
/// cos is 1 - cosine similarity (1 when either vector is zero); hamming
/// counts coordinates differing by more than the tolerance; diff sums those
/// same differences (an L1 norm with small deltas ignored).
inline double distance(std::span<const double> a, std::span<const double> b, const MetricSpec& m) {
  if (a.size() != b.size()) {
    throw ConfigError("distance between vectors of dimension " + std::to_string(a.size()) + " and " +
                      std::to_string(b.size()));
  }
  m.check();
  const std::size_t n = a.size();
  switch (m.kind) {
    case MetricKind::eucl: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case MetricKind::cheb: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(a[i] - b[i]));
      return s;
    }
    case MetricKind::mink: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::pow(std::abs(a[i] - b[i]), m.p);
      return std::pow(s, 1.0 / m.p);
    }
    case MetricKind::cos: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 1.0;
      return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    }
    case MetricKind::hamming: {
      double count = 0.0;
      for (std::size_t i = 0; i < n; ++i) count += std::abs(a[i] - b[i]) > m.tolerance ? 1.0 : 0.0;
      return count;
    }
    case MetricKind::diff: {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (d > m.tolerance) s += d;
      }
      return s;
    }
  }
  return 0.0;
}

enum class ClusterKind { mean, median };

struct ClusterModel {
  std::vector<double> centroid;
  std::uint64_t count = 0;
  ClusterKind kind = ClusterKind::mean;

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

struct TrainingSet {
  std::map<WeaknessClass, ClusterModel> classes;
  std::string config_hash;

  std::size_t dim() const { return classes.empty() ? 0 : classes.begin()->second.centroid.size(); }

  friend bool operator==(const TrainingSet&, const TrainingSet&) = default;
};

struct Ranked {
  WeaknessClass label;
  double score = 0.0;

  friend bool operator==(const Ranked&, const Ranked&) = default;
};

/// Best match first; scores never decrease along the list.
struct ResultSet {
  std::vector<Ranked> ranked;

  const Ranked* at(std::size_t i) const { return i < ranked.size() ? &ranked[i] : nullptr; }

  friend bool operator==(const ResultSet&, const ResultSet&) = default;
};

/// Sorts ascending by score, breaking ties by class id.
inline ResultSet make_result_set(std::vector<Ranked> scores) {
  std::sort(scores.begin(), scores.end(), [](const Ranked& x, const Ranked& y) {
    if (x.score != y.score) return x.score < y.score;
    return x.label < y.label;
  });
  return ResultSet{std::move(scores)};
}

using LabeledVector = std::pair<WeaknessClass, FeatureVector>;

/// Builds one centroid per class. Member vectors are sorted before
/// aggregation, so the result does not depend on input order.
inline TrainingSet train(const std::vector<LabeledVector>& vectors, ClusterKind kind, std::string config_hash) {
  if (vectors.empty()) throw ConfigError("cannot train on an empty vector list");
  if (config_hash.empty()) throw ConfigError("training set needs a configuration hash");
  const std::size_t d = vectors.front().second.dim();

  std::map<WeaknessClass, std::vector<const std::vector<double>*>> members;
  for (const auto& [label, v] : vectors) {
    if (v.dim() != d) {
      throw ConfigError("mixed feature dimensions in training data: " + std::to_string(d) + " vs " +
                        std::to_string(v.dim()));
    }
    members[label].push_back(&v.values);
  }

  TrainingSet ts;
  ts.config_hash = std::move(config_hash);
  for (auto& [label, list] : members) {
    std::sort(list.begin(), list.end(), [](auto* x, auto* y) { return *x < *y; });
    ClusterModel cm{std::vector<double>(d, 0.0), list.size(), kind};
    if (kind == ClusterKind::mean) {
      for (const auto* v : list) {
        for (std::size_t i = 0; i < d; ++i) cm.centroid[i] += (*v)[i];
      }
      for (double& c : cm.centroid) c /= static_cast<double>(list.size());
    } else {
      std::vector<double> column(list.size());
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < list.size(); ++j) column[j] = (*list[j])[i];
        std::sort(column.begin(), column.end());
        const std::size_t mid = column.size() / 2;
        cm.centroid[i] = column.size() % 2 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
      }
    }
    ts.classes.emplace(label, std::move(cm));
  }
  return ts;
}

inline ResultSet classify(std::span<const double> v, const TrainingSet& ts, const MetricSpec& metric) {
  if (ts.classes.empty()) throw ConfigError("classification against an empty training set");
  if (v.size() != ts.dim()) {
    throw ConfigError("feature dimension " + std::to_string(v.size()) + " does not match training dimension " +
                      std::to_string(ts.dim()));
  }
  std::vector<Ranked> scores;
  scores.reserve(ts.classes.size());
  for (const auto& [label, cm] : ts.classes) scores.push_back({label, distance(v, cm.centroid, metric)});
  return make_result_set(std::move(scores));
}

inline ResultSet classify(const FeatureVector& v, const TrainingSet& ts, const MetricSpec& metric) {
  return classify(std::span<const double>(v.values), ts, metric);
}

// --- CWTS container ----------------------------------------------------------

inline constexpr std::string_view kTrainingSetMagic = "CWTS";
inline constexpr std::uint32_t kContainerVersion = 1;

inline std::string serialize(const TrainingSet& ts) {
  detail::ByteWriter w;
  w.raw(kTrainingSetMagic);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(ts.dim()));
  w.str32(ts.config_hash);
  w.u32(static_cast<std::uint32_t>(ts.classes.size()));
  for (const auto& [label, cm] : ts.classes) {
    w.u8(label.kind() == WeaknessKind::cve ? 0 : 1);
    w.str16(label.id());
    w.u8(cm.kind == ClusterKind::mean ? 0 : 1);
    w.u64(cm.count);
    for (double c : cm.centroid) w.f64(c);
  }
  return w.bytes();
}

inline TrainingSet deserialize_training_set(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != kTrainingSetMagic) throw ParseError("not a CWTS training set");
  if (const auto v = r.u32(); v != kContainerVersion) {
    throw ParseError("unsupported CWTS version " + std::to_string(v));
  }
  const std::size_t d = r.u32();
  TrainingSet ts;
  ts.config_hash = r.str32();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto kind = r.u8();
    auto label = [&] {
      try {
        return WeaknessClass::from_id(r.str16());
      } catch (const ValidationError& e) {
        throw ParseError(e.what());
      }
    }();
    if (kind != (label.kind() == WeaknessKind::cve ? 0 : 1)) throw ParseError("class kind mismatch in CWTS record");
    ClusterModel cm;
    const auto ck = r.u8();
    if (ck > 1) throw ParseError("bad cluster kind in CWTS record");
    cm.kind = ck == 0 ? ClusterKind::mean : ClusterKind::median;
    cm.count = r.u64();
    cm.centroid.resize(d);
    for (double& c : cm.centroid) c = r.f64();
    ts.classes.emplace(std::move(label), std::move(cm));
  }
  if (!r.done()) throw ParseError("trailing bytes after CWTS records");
  return ts;
}

}  // namespace codewave
