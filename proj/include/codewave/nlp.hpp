#pragma once

// Byte n-gram language models with MLE, add-delta and Witten-Bell
// estimators, and likelihood-ranked classification.

#include <codewave/classify.hpp>
#include <codewave/corpus_index.hpp>
#include <codewave/detail/binary_io.hpp>
#include <codewave/error.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace codewave {

enum class SmoothingKind { mle, add_delta, witten_bell };

struct SmoothingSpec {
  SmoothingKind kind = SmoothingKind::add_delta;
  double delta = 1.0;

  void check() const {
    if (kind == SmoothingKind::add_delta && !(delta > 0.0)) throw ConfigError("add-delta needs delta > 0");
  }

  friend bool operator==(const SmoothingSpec&, const SmoothingSpec&) = default;
};

struct ContextCounts {
  std::map<std::uint8_t, std::uint64_t> next;
  std::uint64_t total = 0;

  std::uint64_t count(std::uint8_t s) const {
    auto it = next.find(s);
    return it == next.end() ? 0 : it->second;
  }

  friend bool operator==(const ContextCounts&, const ContextCounts&) = default;
};

/// Counts of symbol-after-context over sliding n-grams. The context is the
/// preceding n-1 bytes packed big-endian into an integer (0 for unigrams).
struct NGramModel {
  int n = 1;
  std::uint32_t vocab_size = 256;
  std::optional<WeaknessClass> label;
  std::map<std::uint32_t, ContextCounts> contexts;

  bool empty() const noexcept { return contexts.empty(); }

  const ContextCounts* find(std::uint32_t ctx) const {
    auto it = contexts.find(ctx);
    return it == contexts.end() ? nullptr : &it->second;
  }

  /// Adds the n-grams of one document. n-grams never straddle documents.
  void add(std::span<const std::uint8_t> bytes) {
    const auto w = static_cast<std::size_t>(n);
    if (bytes.size() < w) return;
    for (std::size_t i = 0; i + w <= bytes.size(); ++i) {
      std::uint32_t ctx = 0;
      for (std::size_t k = 0; k + 1 < w; ++k) ctx = (ctx << 8) | bytes[i + k];
      auto& cc = contexts[ctx];
      ++cc.next[bytes[i + w - 1]];
      ++cc.total;
    }
  }

  friend bool operator==(const NGramModel&, const NGramModel&) = default;
};

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline NGramModel train_model(std::span<const std::uint8_t> bytes, int n, std::optional<WeaknessClass> label = {}) {
  if (n < 1 || n > 3) throw ConfigError("n-gram order must be 1, 2 or 3");
  NGramModel m;
  m.n = n;
  m.label = std::move(label);
  m.add(bytes);
  return m;
}

inline std::uint32_t pack_context(std::span<const std::uint8_t> context) {
  std::uint32_t ctx = 0;
  for (auto b : context) ctx = (ctx << 8) | b;
  return ctx;
}

/// P(s | context). An unseen context (no counts) gets 1/V from the smoothed
/// estimators and 0 from MLE. Witten-Bell with every symbol already seen
/// (T = V) leaves no unseen mass and reduces to c/N.
inline double probability(const NGramModel& model, std::span<const std::uint8_t> context, std::uint8_t s,
                          const SmoothingSpec& smoothing) {
  if (context.size() != static_cast<std::size_t>(model.n - 1)) {
    throw UsageError("context length " + std::to_string(context.size()) + " for a " + std::to_string(model.n) +
                     "-gram model");
  }
  const double vocab = model.vocab_size;
  const ContextCounts* cc = model.find(pack_context(context));
  const double c = cc ? static_cast<double>(cc->count(s)) : 0.0;
  const double total = cc ? static_cast<double>(cc->total) : 0.0;

  switch (smoothing.kind) {
    case SmoothingKind::mle:
      return total > 0.0 ? c / total : 0.0;
    case SmoothingKind::add_delta:
      return (c + smoothing.delta) / (total + smoothing.delta * vocab);
    case SmoothingKind::witten_bell: {
      const double types = cc ? static_cast<double>(cc->next.size()) : 0.0;
      if (types == 0.0) return 1.0 / vocab;
      if (types >= vocab) return c / total;
      if (c > 0.0) return c / (total + types);
      return types / ((total + types) * (vocab - types));
    }
  }
  return 0.0;
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Natural-log likelihood of every n-gram in the document. MLE yields -inf
/// for an empty model or any zero-probability n-gram.
inline double score_document(std::span<const std::uint8_t> doc, const NGramModel& model,
                             const SmoothingSpec& smoothing) {
  smoothing.check();
  if (smoothing.kind == SmoothingKind::mle && model.empty()) return kNegInf;
  const auto w = static_cast<std::size_t>(model.n);
  double total = 0.0;
  for (std::size_t i = 0; i + w <= doc.size(); ++i) {
    const double p = probability(model, doc.subspan(i, w - 1), doc[i + w - 1], smoothing);
    if (p <= 0.0) return kNegInf;
    total += std::log(p);
  }
  return total;
}

struct LanguageModelSet {
  int n = 1;
  std::string config_hash;
  std::map<WeaknessClass, NGramModel> models;

  friend bool operator==(const LanguageModelSet&, const LanguageModelSet&) = default;
};

/// Ranks classes by negated log-likelihood so that, as with distances,
/// smaller is better.
inline ResultSet classify_document(std::span<const std::uint8_t> doc, const LanguageModelSet& set,
                                   const SmoothingSpec& smoothing) {
  if (set.models.empty()) throw ConfigError("classification against an empty language model set");
  std::vector<Ranked> scores;
  for (const auto& [label, m] : set.models) scores.push_back({label, -score_document(doc, m, smoothing)});
  return make_result_set(std::move(scores));
}

// --- CWNM container ----------------------------------------------------------

inline constexpr std::string_view kLanguageModelMagic = "CWNM";

inline std::string serialize(const LanguageModelSet& set) {
  detail::ByteWriter w;
  w.raw(kLanguageModelMagic);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(set.n));
  w.str32(set.config_hash);
  w.u32(static_cast<std::uint32_t>(set.models.size()));
  for (const auto& [label, m] : set.models) {
    w.u8(label.kind() == WeaknessKind::cve ? 0 : 1);
    w.str16(label.id());
    w.u32(m.vocab_size);
    w.u32(static_cast<std::uint32_t>(m.contexts.size()));
    for (const auto& [ctx, cc] : m.contexts) {
      w.u32(ctx);
      w.u16(static_cast<std::uint16_t>(cc.next.size()));
      for (const auto& [sym, count] : cc.next) {
        w.u8(sym);
        w.u64(count);
      }
    }
  }
  return w.bytes();
}

inline LanguageModelSet deserialize_language_models(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != kLanguageModelMagic) throw ParseError("not a CWNM language model set");
  if (const auto v = r.u32(); v != kContainerVersion) {
    throw ParseError("unsupported CWNM version " + std::to_string(v));
  }
  LanguageModelSet set;
  set.n = static_cast<int>(r.u32());
  if (set.n < 1 || set.n > 3) throw ParseError("bad n-gram order in CWNM container");
  set.config_hash = r.str32();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = r.u8();
    auto label = [&] {
      try {
        return WeaknessClass::from_id(r.str16());
      } catch (const ValidationError& e) {
        throw ParseError(e.what());
      }
    }();
    if (kind != (label.kind() == WeaknessKind::cve ? 0 : 1)) throw ParseError("class kind mismatch in CWNM record");
    NGramModel m;
    m.n = set.n;
    m.label = label;
    m.vocab_size = r.u32();
    const auto nctx = r.u32();
    for (std::uint32_t c = 0; c < nctx; ++c) {
      const auto ctx = r.u32();
      auto& cc = m.contexts[ctx];
      const auto entries = r.u16();
      for (std::uint16_t e = 0; e < entries; ++e) {
        const auto sym = r.u8();
        const auto n = r.u64();
        cc.next[sym] = n;
        cc.total += n;
      }
    }
    set.models.emplace(std::move(label), std::move(m));
  }
  if (!r.done()) throw ParseError("trailing bytes after CWNM records");
  return set;
}

}  // namespace codewave
