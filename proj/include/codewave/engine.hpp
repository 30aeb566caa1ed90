#pragma once

// End-to-end train/test orchestration for both pipelines, warnings,
// first/second-guess precision statistics and configuration sweeps.

#include <codewave/classify.hpp>
#include <codewave/corpus_index.hpp>
#include <codewave/detail/atomic_write.hpp>
#include <codewave/detail/parallel.hpp>
#include <codewave/error.hpp>
#include <codewave/features.hpp>
#include <codewave/nlp.hpp>
#include <codewave/options.hpp>
#include <codewave/preprocess.hpp>
#include <codewave/signal.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace codewave {

using Model = std::variant<TrainingSet, LanguageModelSet>;

inline const std::string& model_hash(const Model& m) {
  return std::visit([](const auto& x) -> const std::string& { return x.config_hash; }, m);
}

inline std::size_t model_class_count(const Model& m) {
  if (const auto* ts = std::get_if<TrainingSet>(&m)) return ts->classes.size();
  return std::get<LanguageModelSet>(m).models.size();
}

inline std::string serialize(const Model& m) {
  return std::visit([](const auto& x) { return serialize(x); }, m);
}

inline Model deserialize_model(std::string_view bytes) {
  if (bytes.substr(0, 4) == kTrainingSetMagic) return deserialize_training_set(bytes);
  if (bytes.substr(0, 4) == kLanguageModelMagic) return deserialize_language_models(bytes);
  throw ParseError("unrecognized model container");
}

inline void save_model(const Model& m, const std::filesystem::path& file) { detail::atomic_write(file, serialize(m)); }

inline Model load_model(const std::filesystem::path& file) { return deserialize_model(detail::read_file(file)); }

/// Loader -> preprocessing -> feature extraction for one file.
inline FeatureVector file_features(const std::filesystem::path& file, const PipelineConfig& cfg) {
  auto s = load_signal(file, cfg.loader_ngram);
  s = preprocess(std::move(s), cfg.filter);
  return extract(s, cfg.extractor);
}

/// Trains one model per class of the selected kind. A file labelled with k
/// classes contributes its whole content to all k of them. Entries without a
/// label of the selected kind are skipped; classes that never appear simply
/// have no model.
inline Model train_case(const TestCaseIndex& index, const std::filesystem::path& root, const PipelineConfig& cfg,
                        unsigned jobs = 1) {
  if (index.mode != IndexMode::train) throw ValidationError("training requires a train-mode index");
  validate(index);

  std::vector<const IndexEntry*> labelled;
  for (const auto& e : index.entries) {
    if (!e.labels(cfg.class_kind).empty()) labelled.push_back(&e);
  }
  if (labelled.empty()) {
    throw ValidationError("no " + std::string(to_string(cfg.class_kind)) + " labels in training index");
  }

  if (cfg.pipeline == Pipeline::signal) {
    std::vector<FeatureVector> features(labelled.size());
    detail::parallel_for(labelled.size(), jobs,
                         [&](std::size_t i) { features[i] = file_features(root / labelled[i]->path, cfg); });
    std::vector<LabeledVector> data;
    for (std::size_t i = 0; i < labelled.size(); ++i) {
      for (auto& label : labelled[i]->labels(cfg.class_kind)) data.emplace_back(label, features[i]);
    }
    return train(data, cfg.cluster, cfg.config_hash());
  }

  LanguageModelSet set;
  set.n = cfg.nlp_n;
  set.config_hash = cfg.config_hash();
  for (const auto* e : labelled) {
    const auto bytes = detail::read_file(root / e->path);
    for (auto& label : e->labels(cfg.class_kind)) {
      auto [it, fresh] = set.models.try_emplace(label);
      if (fresh) {
        it->second.n = cfg.nlp_n;
        it->second.label = label;
      }
      it->second.add(as_bytes(bytes));
    }
  }
  return set;
}

inline void check_model(const Model& model, const PipelineConfig& cfg) {
  if (model_hash(model) != cfg.config_hash()) {
    throw ValidationError("model was trained with '" + model_hash(model) + "' but the test configuration is '" +
                          cfg.config_hash() + "'");
  }
}

/// Scores one file against every trained class. This is the unit of work a
/// distributed worker performs.
inline ResultSet classify_file(const std::filesystem::path& file, const Model& model, const PipelineConfig& cfg) {
  if (const auto* ts = std::get_if<TrainingSet>(&model)) {
    return classify(file_features(file, cfg), *ts, cfg.metric);
  }
  const auto bytes = detail::read_file(file);
  return classify_document(as_bytes(bytes), std::get<LanguageModelSet>(model), cfg.smoothing);
}

struct FileResult {
  std::string path;
  ResultSet result;

  friend bool operator==(const FileResult&, const FileResult&) = default;
};

inline std::vector<FileResult> classify_case(const TestCaseIndex& index, const std::filesystem::path& root,
                                             const Model& model, const PipelineConfig& cfg, unsigned jobs = 1) {
  check_model(model, cfg);
  std::vector<FileResult> out(index.entries.size());
  detail::parallel_for(index.entries.size(), jobs, [&](std::size_t i) {
    out[i] = FileResult{index.entries[i].path, classify_file(root / index.entries[i].path, model, cfg)};
  });
  return out;
}

struct Warning {
  std::string path;
  WeaknessClass label;
  double score = 0.0;
  int rank = 1;
  std::optional<WeaknessClass> second_guess;
  std::string config;

  friend bool operator==(const Warning&, const Warning&) = default;
};

/// Accepts a file when its best score is finite and within the threshold;
/// the runner-up class rides along as the second guess.
inline std::optional<Warning> make_warning(const std::string& path, const ResultSet& r, const PipelineConfig& cfg) {
  const Ranked* top = r.at(0);
  if (!top || !std::isfinite(top->score) || top->score > cfg.threshold) return std::nullopt;
  Warning w{path, top->label, top->score, 1, std::nullopt, cfg.option_string()};
  if (const Ranked* second = r.at(1)) w.second_guess = second->label;
  return w;
}

inline std::vector<Warning> make_warnings(const std::vector<FileResult>& results, const PipelineConfig& cfg) {
  std::vector<Warning> out;
  for (const auto& fr : results) {
    if (auto w = make_warning(fr.path, fr.result, cfg)) out.push_back(std::move(*w));
  }
  return out;
}

inline std::vector<Warning> test_case(const TestCaseIndex& index, const std::filesystem::path& root,
                                      const Model& model, const PipelineConfig& cfg, unsigned jobs = 1) {
  return make_warnings(classify_case(index, root, model, cfg, jobs), cfg);
}

/// Largest finite best-match score seen when the training data is tested
/// against its own model: the loosest threshold that still accepts every
/// known-weak file.
inline double calibrate_threshold(const std::vector<FileResult>& self_test) {
  double t = 0.0;
  for (const auto& fr : self_test) {
    if (const Ranked* top = fr.result.at(0); top && std::isfinite(top->score)) t = std::max(t, top->score);
  }
  return t;
}

// --- precision statistics ----------------------------------------------------

enum class Guess { first, second };

inline std::string_view to_string(Guess g) { return g == Guess::first ? "1st" : "2nd"; }

struct StatsRow {
  std::string key;  // option string or class id
  std::uint64_t good = 0;
  std::uint64_t bad = 0;

  std::uint64_t total() const noexcept { return good + bad; }

  /// 100 * good / (good + bad) in hundredths of a percent, rounded half-up;
  /// 0 for an empty row.
  std::uint64_t hundredths() const noexcept {
    const auto t = total();
    return t == 0 ? 0 : (20000 * good + t) / (2 * t);
  }

  double precision_pct() const noexcept { return static_cast<double>(hundredths()) / 100.0; }

  std::string percent() const { return fmt::format("{}.{:02}", hundredths() / 100, hundredths() % 100); }

  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

/// Descending by precision (compared exactly), then by key. Empty rows last.
inline bool ranks_before(const StatsRow& a, const StatsRow& b) {
  const bool a_empty = a.total() == 0, b_empty = b.total() == 0;
  if (a_empty != b_empty) return b_empty;
  if (!a_empty) {
    const auto lhs = static_cast<unsigned __int128>(a.good) * b.total();
    const auto rhs = static_cast<unsigned __int128>(b.good) * a.total();
    if (lhs != rhs) return lhs > rhs;
  }
  return a.key < b.key;
}

inline void rank_rows(std::vector<StatsRow>& rows) { std::stable_sort(rows.begin(), rows.end(), ranks_before); }

struct RunStats {
  Guess guess = Guess::first;
  std::vector<StatsRow> per_config;
  std::vector<StatsRow> per_class;

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

/// Concatenates per-configuration rows and sums per-class rows by key.
inline RunStats merge(RunStats a, const RunStats& b) {
  a.per_config.insert(a.per_config.end(), b.per_config.begin(), b.per_config.end());
  for (const auto& row : b.per_class) {
    auto it = std::find_if(a.per_class.begin(), a.per_class.end(), [&](const StatsRow& r) { return r.key == row.key; });
    if (it == a.per_class.end()) {
      a.per_class.push_back(row);
    } else {
      it->good += row.good;
      it->bad += row.bad;
    }
  }
  rank_rows(a.per_config);
  rank_rows(a.per_class);
  return a;
}

struct Evaluation {
  RunStats first{Guess::first, {}, {}};
  RunStats second{Guess::second, {}, {}};
  std::size_t expected = 0;       // class-bearing files in the ground truth
  std::size_t unknown_paths = 0;  // warnings whose path is not in the ground truth

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

/// Tallies first- and second-guess precision. A warning is a first-guess hit
/// when its class is one of the file's true classes; a second-guess hit when
/// either its class or its runner-up is, so first-guess hits count in both
/// tables. Per-class rows credit the matched class on a hit and debit every
/// true class of the file on a miss, so a class that was never trained shows
/// up with 0% rather than disappearing.
inline Evaluation score_stats(const std::vector<Warning>& warnings, const TestCaseIndex& truth, WeaknessKind kind,
                              const std::string& config_key) {
  Evaluation ev;
  std::unordered_map<std::string, const IndexEntry*> by_path;
  for (const auto& e : truth.entries) {
    by_path.emplace(e.path, &e);
    if (!e.labels(kind).empty()) ++ev.expected;
  }

  StatsRow first_row{config_key}, second_row{config_key};
  std::map<std::string, StatsRow> first_cls, second_cls;
  auto credit = [](std::map<std::string, StatsRow>& rows, const std::string& id, bool good) {
    auto& r = rows[id];
    r.key = id;
    (good ? r.good : r.bad) += 1;
  };

  for (const auto& w : warnings) {
    if (w.rank != 1) continue;
    auto it = by_path.find(w.path);
    if (it == by_path.end()) {
      ++ev.unknown_paths;
      continue;
    }
    const auto labels = it->second->labels(kind);
    if (labels.empty()) continue;
    auto is_true = [&](const WeaknessClass& c) { return std::find(labels.begin(), labels.end(), c) != labels.end(); };

    const bool hit1 = is_true(w.label);
    const bool hit2_only = !hit1 && w.second_guess && is_true(*w.second_guess);

    (hit1 ? first_row.good : first_row.bad) += 1;
    (hit1 || hit2_only ? second_row.good : second_row.bad) += 1;

    if (hit1) {
      credit(first_cls, w.label.id(), true);
      credit(second_cls, w.label.id(), true);
    } else {
      for (const auto& l : labels) credit(first_cls, l.id(), false);
      if (hit2_only) {
        credit(second_cls, w.second_guess->id(), true);
      } else {
        for (const auto& l : labels) credit(second_cls, l.id(), false);
      }
    }
  }

  ev.first.per_config.push_back(first_row);
  ev.second.per_config.push_back(second_row);
  for (auto& [id, row] : first_cls) ev.first.per_class.push_back(row);
  for (auto& [id, row] : second_cls) ev.second.per_class.push_back(row);
  rank_rows(ev.first.per_class);
  rank_rows(ev.second.per_class);
  return ev;
}

/// Flags per-configuration rows whose good + bad falls short of the number of
/// evaluated files (a recall hole: some files produced no verdict).
inline std::vector<std::string> recall_diagnostics(const RunStats& stats, std::size_t expected) {
  std::vector<std::string> out;
  for (const auto& row : stats.per_config) {
    if (row.total() < expected) {
      out.push_back(fmt::format("recall: {} guess, '{}' accounts for {}+{}={} of {} evaluated files",
                                to_string(stats.guess), row.key, row.good, row.bad, row.total(), expected));
    }
  }
  return out;
}

inline std::vector<std::string> recall_diagnostics(const Evaluation& ev) {
  auto out = recall_diagnostics(ev.first, ev.expected);
  auto more = recall_diagnostics(ev.second, ev.expected);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

// --- sweeps ------------------------------------------------------------------

/// Loaders x preprocessors x extractors x metrics for the signal pipeline.
inline std::vector<PipelineConfig> default_grid(WeaknessKind kind) {
  std::vector<PipelineConfig> grid;
  for (int ngram : {1, 2, 3}) {
    for (auto f : {FilterKind::raw, FilterKind::norm, FilterKind::fft_low, FilterKind::sdwt}) {
      for (auto x : {ExtractorKind::fft, ExtractorKind::lpc, ExtractorKind::minmax}) {
        for (auto m : {MetricKind::cheb, MetricKind::diff, MetricKind::eucl, MetricKind::cos, MetricKind::mink,
                       MetricKind::hamming}) {
          PipelineConfig c;
          c.class_kind = kind;
          c.loader_ngram = ngram;
          c.filter.kind = f;
          c.extractor.kind = x;
          c.metric.kind = m;
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

struct SweepRow {
  PipelineConfig config;
  std::optional<Evaluation> evaluation;
  double seconds = 0.0;
  std::string error;  // non-empty when the configuration failed
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ranked by first-guess precision
  RunStats first{Guess::first, {}, {}};
  RunStats second{Guess::second, {}, {}};
  std::vector<std::string> diagnostics;
};

struct SweepInputs {
  const TestCaseIndex& train_index;
  std::filesystem::path train_root;
  const TestCaseIndex& test_index;
  std::filesystem::path test_root;
  const TestCaseIndex& truth;
};

/// Runs every configuration, models shared between configurations that
/// differ only in scoring settings. A failing configuration becomes an error
/// row; the sweep continues.
inline SweepResult sweep(const SweepInputs& in, const std::vector<PipelineConfig>& grid, unsigned jobs = 1) {
  if (grid.empty()) throw ConfigError("sweep needs at least one configuration");
  using clock = std::chrono::steady_clock;
  SweepResult out;
  std::map<std::string, Model> models;
  for (const auto& cfg : grid) {
    SweepRow row{cfg, std::nullopt, 0.0, {}};
    const auto start = clock::now();
    try {
      auto it = models.find(cfg.config_hash());
      if (it == models.end()) it = models.emplace(cfg.config_hash(), train_case(in.train_index, in.train_root, cfg, jobs)).first;
      const auto warnings = test_case(in.test_index, in.test_root, it->second, cfg, jobs);
      row.evaluation = score_stats(warnings, in.truth, cfg.class_kind, cfg.option_string());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(clock::now() - start).count();
    out.rows.push_back(std::move(row));
  }

  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.evaluation.has_value() != b.evaluation.has_value()) return a.evaluation.has_value();
    if (!a.evaluation) return false;
    return ranks_before(a.evaluation->first.per_config.front(), b.evaluation->first.per_config.front());
  });

  for (const auto& row : out.rows) {
    if (!row.evaluation) {
      out.diagnostics.push_back("failed: '" + row.config.option_string() + "': " + row.error);
      continue;
    }
    out.first = merge(std::move(out.first), row.evaluation->first);
    out.second = merge(std::move(out.second), row.evaluation->second);
    auto diag = recall_diagnostics(*row.evaluation);
    out.diagnostics.insert(out.diagnostics.end(), diag.begin(), diag.end());
  }
  return out;
}

}  // namespace codewave
