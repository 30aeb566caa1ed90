#pragma once

// Pipeline configuration and its canonical option-string form, e.g.
// "-cweid -nopreprep -raw -fft -cheb" or "-nopreprep -char -unigram -add-delta".
//
// Canonical order: [-cweid] -nopreprep, then either
//   <preprocess> <features> <metric>      (signal pipeline), or
//   -char <n-gram> <estimator>            (NLP pipeline),
// then non-default parameters as --name=value, then output flags.

#include <codewave/classify.hpp>
#include <codewave/corpus_index.hpp>
#include <codewave/error.hpp>
#include <codewave/features.hpp>
#include <codewave/nlp.hpp>
#include <codewave/preprocess.hpp>

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace codewave {

enum class Pipeline { signal, nlp };

struct OutputFlags {
  bool spectrogram = false;
  bool graph = false;
  bool flucid = false;

  friend bool operator==(const OutputFlags&, const OutputFlags&) = default;
};

struct PipelineConfig {
  WeaknessKind class_kind = WeaknessKind::cve;
  Pipeline pipeline = Pipeline::signal;

  // signal pipeline
  int loader_ngram = 2;
  FilterSpec filter;
  ExtractorSpec extractor;
  ClusterKind cluster = ClusterKind::mean;
  MetricSpec metric;

  // NLP pipeline
  int nlp_n = 1;
  SmoothingSpec smoothing;

  double threshold = std::numeric_limits<double>::infinity();
  OutputFlags outputs;

  std::string option_string() const;
  /// Option string without output flags, reduced to [a-z0-9] for file names:
  /// "-cweid -nopreprep -raw -fft -cheb" -> "cweidnoprepreprawfftcheb".
  std::string compressed() const;
  /// Identifies every setting that shapes the trained model; a model can only
  /// be tested under a configuration with the same hash.
  std::string config_hash() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

namespace detail {

inline std::string fmt_number(double v) { return fmt::format("{}", v); }

inline const char* filter_flag(FilterKind k) {
  switch (k) {
    case FilterKind::raw: return "-raw";
    case FilterKind::norm: return "-norm";
    case FilterKind::fft_low: return "-low";
    case FilterKind::sdwt: return "-sdwt";
  }
  return "-raw";
}

inline const char* ngram_flag(int n) {
  switch (n) {
    case 1: return "-unigram";
    case 2: return "-bigram";
    default: return "-trigram";
  }
}

inline const char* smoothing_flag(SmoothingKind k) {
  switch (k) {
    case SmoothingKind::mle: return "-mle";
    case SmoothingKind::add_delta: return "-add-delta";
    case SmoothingKind::witten_bell: return "-witten-bell";
  }
  return "-add-delta";
}

// Pipeline part of the option string plus non-default parameters.
inline std::vector<std::string> pipeline_tokens(const PipelineConfig& c, bool with_threshold) {
  const PipelineConfig def;
  std::vector<std::string> t;
  if (c.class_kind == WeaknessKind::cwe) t.emplace_back("-cweid");
  t.emplace_back("-nopreprep");
  if (c.pipeline == Pipeline::signal) {
    t.emplace_back(filter_flag(c.filter.kind));
    t.emplace_back("-" + to_string(c.extractor.kind));
    t.emplace_back("-" + to_string(c.metric.kind));
    if (c.loader_ngram != def.loader_ngram) t.push_back(fmt::format("--ngram={}", c.loader_ngram));
    if (c.filter.kind == FilterKind::fft_low && c.filter.cutoff_fraction != def.filter.cutoff_fraction) {
      t.push_back("--cutoff=" + fmt_number(c.filter.cutoff_fraction));
    }
    if (c.filter.kind == FilterKind::sdwt) {
      if (c.filter.wavelet != def.filter.wavelet) t.push_back("--wavelet=" + to_string(c.filter.wavelet));
      if (c.filter.levels != def.filter.levels) t.push_back(fmt::format("--levels={}", c.filter.levels));
    }
    if (c.extractor.kind == ExtractorKind::fft) {
      if (c.extractor.fft_window != def.extractor.fft_window) t.push_back(fmt::format("--window={}", c.extractor.fft_window));
      if (c.extractor.fft_dim != def.extractor.fft_dim) t.push_back(fmt::format("--dim={}", c.extractor.fft_dim));
    } else if (c.extractor.kind == ExtractorKind::lpc) {
      if (c.extractor.lpc_order != def.extractor.lpc_order) t.push_back(fmt::format("--order={}", c.extractor.lpc_order));
    } else if (c.extractor.minmax_dim != def.extractor.minmax_dim) {
      t.push_back(fmt::format("--dim={}", c.extractor.minmax_dim));
    }
    if (c.cluster == ClusterKind::median) t.emplace_back("--cluster=median");
    if (c.metric.kind == MetricKind::mink && c.metric.p != def.metric.p) t.push_back("--mink-p=" + fmt_number(c.metric.p));
    if ((c.metric.kind == MetricKind::hamming || c.metric.kind == MetricKind::diff) &&
        c.metric.tolerance != def.metric.tolerance) {
      t.push_back("--tolerance=" + fmt_number(c.metric.tolerance));
    }
  } else {
    t.emplace_back("-char");
    t.emplace_back(ngram_flag(c.nlp_n));
    t.emplace_back(smoothing_flag(c.smoothing.kind));
    if (c.smoothing.kind == SmoothingKind::add_delta && c.smoothing.delta != def.smoothing.delta) {
      t.push_back("--delta=" + fmt_number(c.smoothing.delta));
    }
  }
  if (with_threshold && std::isfinite(c.threshold)) t.push_back("--threshold=" + fmt_number(c.threshold));
  return t;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace detail

inline std::string PipelineConfig::option_string() const {
  auto t = detail::pipeline_tokens(*this, true);
  if (outputs.spectrogram) t.emplace_back("-spectrogram");
  if (outputs.graph) t.emplace_back("-graph");
  if (outputs.flucid) t.emplace_back("-flucid");
  return detail::join(t);
}

inline std::string PipelineConfig::compressed() const {
  std::string out;
  for (char c : detail::join(detail::pipeline_tokens(*this, true))) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::string PipelineConfig::config_hash() const {
  PipelineConfig model_part = *this;
  // Scoring-only settings do not change what training produces.
  model_part.metric = MetricSpec{};
  model_part.smoothing = SmoothingSpec{};
  model_part.threshold = std::numeric_limits<double>::infinity();
  model_part.outputs = OutputFlags{};
  auto t = detail::pipeline_tokens(model_part, false);
  if (pipeline == Pipeline::signal) {
    t.erase(t.begin() + (class_kind == WeaknessKind::cwe ? 4 : 3));  // drop the metric flag
  } else {
    t.pop_back();  // drop the estimator flag
  }
  if (pipeline == Pipeline::signal && loader_ngram == PipelineConfig{}.loader_ngram) {
    t.push_back(fmt::format("--ngram={}", loader_ngram));
  }
  return detail::join(t);
}

struct ParsedOptions {
  PipelineConfig config;
  std::vector<std::string> rest;  // tokens that are not pipeline options
};

namespace detail {

template <typename T>
T parse_number(std::string_view flag, std::string_view text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw UsageError("bad value '" + std::string(text) + "' for " + std::string(flag));
  }
  return v;
}

class OptionParser {
 public:
  ParsedOptions run(std::span<const std::string> args) {
    ParsedOptions out;
    for (const auto& arg : args) {
      if (!consume(arg)) out.rest.push_back(arg);
    }
    finish();
    out.config = cfg_;
    return out;
  }

 private:
  // Records the flag chosen for a mutually exclusive group.
  void pick(const std::string& group, const std::string& flag) {
    auto [it, fresh] = groups_.emplace(group, flag);
    if (!fresh && it->second != flag) {
      throw UsageError("conflicting options " + it->second + " and " + flag + " (both select the " + group + ")");
    }
  }

  void need_signal(const std::string& flag) { signal_flags_.push_back(flag); }
  void need_nlp(const std::string& flag) { nlp_flags_.push_back(flag); }

  bool consume(const std::string& arg) {
    if (arg.size() < 2 || arg[0] != '-') return false;
    std::string body = arg.substr(arg[1] == '-' ? 2 : 1);
    std::string value;
    const auto eq = body.find('=');
    const bool has_value = eq != std::string::npos;
    if (has_value) {
      value = body.substr(eq + 1);
      body = body.substr(0, eq);
    }
    const std::string flag = "-" + body;

    if (!has_value) {
      if (body == "cweid") { cfg_.class_kind = WeaknessKind::cwe; return true; }
      if (body == "nopreprep") return true;
      if (body == "raw") return set_filter(flag, FilterKind::raw);
      if (body == "norm") return set_filter(flag, FilterKind::norm);
      if (body == "low") return set_filter(flag, FilterKind::fft_low);
      if (body == "sdwt") return set_filter(flag, FilterKind::sdwt);
      if (body == "fft") return set_extractor(flag, ExtractorKind::fft);
      if (body == "lpc") return set_extractor(flag, ExtractorKind::lpc);
      if (body == "minmax") return set_extractor(flag, ExtractorKind::minmax);
      if (body == "cheb") return set_metric(flag, MetricKind::cheb);
      if (body == "diff") return set_metric(flag, MetricKind::diff);
      if (body == "eucl") return set_metric(flag, MetricKind::eucl);
      if (body == "cos") return set_metric(flag, MetricKind::cos);
      if (body == "mink") return set_metric(flag, MetricKind::mink);
      if (body == "hamming") return set_metric(flag, MetricKind::hamming);
      if (body == "char") { need_nlp(flag); return true; }
      if (body == "unigram") return set_nlp_n(flag, 1);
      if (body == "bigram") return set_nlp_n(flag, 2);
      if (body == "trigram") return set_nlp_n(flag, 3);
      if (body == "add-delta") return set_smoothing(flag, SmoothingKind::add_delta);
      if (body == "mle") return set_smoothing(flag, SmoothingKind::mle);
      if (body == "witten-bell") return set_smoothing(flag, SmoothingKind::witten_bell);
      if (body == "flucid") { cfg_.outputs.flucid = true; return true; }
      if (body == "spectrogram") { cfg_.outputs.spectrogram = true; return true; }
      if (body == "graph") { cfg_.outputs.graph = true; return true; }
      return false;
    }

    if (body == "ngram") {
      need_signal(flag);
      cfg_.loader_ngram = parse_number<int>(flag, value);
      if (cfg_.loader_ngram < 1 || cfg_.loader_ngram > 3) throw UsageError("--ngram must be 1, 2 or 3");
      return true;
    }
    if (body == "cutoff") { params_.push_back({flag, "-low"}); cfg_.filter.cutoff_fraction = parse_number<double>(flag, value); return true; }
    if (body == "wavelet") {
      params_.push_back({flag, "-sdwt"});
      if (value == "haar") cfg_.filter.wavelet = WaveletName::haar;
      else if (value == "db2") cfg_.filter.wavelet = WaveletName::db2;
      else throw UsageError("unknown wavelet '" + value + "' (haar, db2)");
      return true;
    }
    if (body == "levels") { params_.push_back({flag, "-sdwt"}); cfg_.filter.levels = parse_number<int>(flag, value); return true; }
    if (body == "window") { params_.push_back({flag, "-fft"}); cfg_.extractor.fft_window = parse_number<int>(flag, value); return true; }
    if (body == "dim") { dim_ = parse_number<int>(flag, value); return true; }
    if (body == "order") { params_.push_back({flag, "-lpc"}); cfg_.extractor.lpc_order = parse_number<int>(flag, value); return true; }
    if (body == "cluster") {
      need_signal(flag);
      if (value == "mean") cfg_.cluster = ClusterKind::mean;
      else if (value == "median") cfg_.cluster = ClusterKind::median;
      else throw UsageError("unknown cluster kind '" + value + "' (mean, median)");
      return true;
    }
    if (body == "mink-p") { params_.push_back({flag, "-mink"}); cfg_.metric.p = parse_number<double>(flag, value); return true; }
    if (body == "tolerance") { tolerance_ = parse_number<double>(flag, value); return true; }
    if (body == "delta") { params_.push_back({flag, "-add-delta"}); cfg_.smoothing.delta = parse_number<double>(flag, value); return true; }
    if (body == "threshold") {
      cfg_.threshold = value == "inf" ? std::numeric_limits<double>::infinity() : parse_number<double>(flag, value);
      if (!(cfg_.threshold >= 0.0)) throw UsageError("--threshold must be >= 0");
      return true;
    }
    return false;
  }

  bool set_filter(const std::string& flag, FilterKind k) {
    pick("preprocessing", flag);
    need_signal(flag);
    cfg_.filter.kind = k;
    return true;
  }
  bool set_extractor(const std::string& flag, ExtractorKind k) {
    pick("feature extractor", flag);
    need_signal(flag);
    cfg_.extractor.kind = k;
    return true;
  }
  bool set_metric(const std::string& flag, MetricKind k) {
    pick("distance metric", flag);
    need_signal(flag);
    cfg_.metric.kind = k;
    return true;
  }
  bool set_nlp_n(const std::string& flag, int n) {
    pick("n-gram order", flag);
    need_nlp(flag);
    cfg_.nlp_n = n;
    return true;
  }
  bool set_smoothing(const std::string& flag, SmoothingKind k) {
    pick("smoothing estimator", flag);
    need_nlp(flag);
    cfg_.smoothing.kind = k;
    return true;
  }

  std::string chosen(const std::string& group, const std::string& fallback) const {
    auto it = groups_.find(group);
    return it == groups_.end() ? fallback : it->second;
  }

  void finish() {
    if (!signal_flags_.empty() && !nlp_flags_.empty()) {
      throw UsageError("conflicting options " + signal_flags_.front() + " and " + nlp_flags_.front() +
                       " (signal and NLP pipelines)");
    }
    cfg_.pipeline = nlp_flags_.empty() ? Pipeline::signal : Pipeline::nlp;

    // Parameters must belong to the selected algorithm so that the canonical
    // string captures every non-default field.
    const bool signal = cfg_.pipeline == Pipeline::signal;
    for (const auto& [flag, owner] : params_) {
      const bool ok = owner == "-add-delta" ? !signal && cfg_.smoothing.kind == SmoothingKind::add_delta
                      : owner == "-low"     ? signal && cfg_.filter.kind == FilterKind::fft_low
                      : owner == "-sdwt"    ? signal && cfg_.filter.kind == FilterKind::sdwt
                      : owner == "-fft"     ? signal && cfg_.extractor.kind == ExtractorKind::fft
                      : owner == "-lpc"     ? signal && cfg_.extractor.kind == ExtractorKind::lpc
                      : owner == "-mink"    ? signal && cfg_.metric.kind == MetricKind::mink
                                            : false;
      if (!ok) throw UsageError(flag + " applies only together with " + owner);
    }
    if (dim_) {
      if (!signal || cfg_.extractor.kind == ExtractorKind::lpc) throw UsageError("-dim applies only to -fft or -minmax");
      (cfg_.extractor.kind == ExtractorKind::fft ? cfg_.extractor.fft_dim : cfg_.extractor.minmax_dim) = *dim_;
    }
    if (tolerance_) {
      if (!signal || (cfg_.metric.kind != MetricKind::hamming && cfg_.metric.kind != MetricKind::diff)) {
        throw UsageError("-tolerance applies only to -hamming or -diff");
      }
      cfg_.metric.tolerance = *tolerance_;
    }
    try {
      cfg_.filter.check();
      cfg_.extractor.check();
      cfg_.metric.check();
      cfg_.smoothing.check();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }

  PipelineConfig cfg_;
  std::map<std::string, std::string> groups_;
  std::vector<std::string> signal_flags_, nlp_flags_;
  std::vector<std::pair<std::string, std::string>> params_;
  std::optional<int> dim_;
  std::optional<double> tolerance_;
};

}  // namespace detail

/// Extracts pipeline options from `args`; everything unrecognized is
/// returned in `rest`. Flags accept one or two leading dashes.
inline ParsedOptions parse_options(std::span<const std::string> args) {
  return detail::OptionParser{}.run(args);
}

/// Parses a complete option string; any unrecognized token is an error.
inline PipelineConfig parse_option_string(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::vector<std::string> tokens;
  for (std::string t; is >> t;) tokens.push_back(t);
  auto parsed = parse_options(tokens);
  if (!parsed.rest.empty()) throw UsageError("unknown option '" + parsed.rest.front() + "'");
  return parsed.config;
}

}  // namespace codewave
