#pragma once

// Report exporters: SATE-style XML, a Forensic Lucid evidential-statement
// dialect, precision tables, and grayscale PGM wave/spectrogram images.

#include <codewave/corpus_index.hpp>
#include <codewave/detail/xml.hpp>
#include <codewave/dft.hpp>
#include <codewave/engine.hpp>
#include <codewave/error.hpp>
#include <codewave/options.hpp>
#include <codewave/signal.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace codewave {

struct CaseMeta {
  std::string case_name;
  std::string case_version;
  std::string config;  // option string

  friend bool operator==(const CaseMeta&, const CaseMeta&) = default;
};

struct ExportOptions {
  // Free-form comment placed after the XML declaration (e.g. a timestamp).
  // Off by default so that reports are byte-reproducible.
  std::optional<std::string> header_comment;
};

inline std::vector<Warning> sorted_warnings(std::vector<Warning> w) {
  std::stable_sort(w.begin(), w.end(), [](const Warning& a, const Warning& b) {
    if (a.path != b.path) return a.path < b.path;
    return a.rank < b.rank;
  });
  return w;
}

/// Fixed notation, six decimals; never scientific.
inline std::string format_score(double v) { return fmt::format("{:.6f}", v); }

inline std::string export_sate_xml(const std::vector<Warning>& warnings, const CaseMeta& meta,
                                   const ExportOptions& opts = {}) {
  using detail::xml_escape;
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (opts.header_comment) {
    std::string c = *opts.header_comment;
    for (auto pos = c.find("--"); pos != std::string::npos; pos = c.find("--", pos)) c.replace(pos, 2, "- -");
    out += "<!-- " + c + " -->\n";
  }
  out += fmt::format("<report case=\"{}\" version=\"{}\" config=\"{}\">\n", xml_escape(meta.case_name),
                     xml_escape(meta.case_version), xml_escape(meta.config));
  for (const auto& w : sorted_warnings(warnings)) {
    out += fmt::format("  <warning path=\"{}\" score=\"{}\" rank=\"{}\">\n", xml_escape(w.path),
                       format_score(w.score), w.rank);
    out += fmt::format("    <class kind=\"{}\" id=\"{}\"/>\n", to_string(w.label.kind()), xml_escape(w.label.id()));
    if (w.second_guess) {
      out += fmt::format("    <second-guess kind=\"{}\" id=\"{}\"/>\n", to_string(w.second_guess->kind()),
                         xml_escape(w.second_guess->id()));
    }
    out += "  </warning>\n";
  }
  out += "</report>\n";
  return out;
}

struct SateReport {
  CaseMeta meta;
  std::vector<Warning> warnings;
};

/// Parses and validates a report. Enforces the same structure as
/// docs/sate-report.xsd: attributes present, scores in fixed notation,
/// positive ranks, exactly one <class> and at most one <second-guess>.
inline SateReport parse_sate_xml(const std::string& xml) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream is(xml);
    pt::read_xml(is, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("report is not well-formed XML: ") + e.what());
  }
  const auto* root = doc.get_child_optional("report").get_ptr();
  if (!root) throw ParseError("report lacks a <report> root element");
  for (const auto& [tag, _] : doc) {
    if (tag != "report" && tag != "<xmlcomment>") throw ParseError("unexpected top-level element <" + tag + ">");
  }

  SateReport r;
  r.meta.case_name = detail::required_attr(*root, "case", "<report>");
  r.meta.case_version = detail::required_attr(*root, "version", "<report>");
  r.meta.config = detail::required_attr(*root, "config", "<report>");

  static const std::regex fixed(R"(-?\d+\.\d{6})");
  auto read_class = [](const pt::ptree& node, const std::string& where) {
    const auto id = detail::required_attr(node, "id", where);
    const auto kind = detail::required_attr(node, "kind", where);
    try {
      auto c = WeaknessClass::from_id(id);
      if (to_string(c.kind()) != kind) throw ParseError("class kind '" + kind + "' does not match " + id);
      return c;
    } catch (const ValidationError& e) {
      throw ParseError(std::string(e.what()) + " in " + where);
    }
  };

  for (const auto& [tag, node] : *root) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag != "warning") throw ParseError("unexpected element <" + tag + "> in report");
    const auto path = detail::required_attr(node, "path", "<warning>");
    const auto score = detail::required_attr(node, "score", path);
    if (!std::regex_match(score, fixed)) throw ParseError("score '" + score + "' is not fixed notation in " + path);
    const auto rank = detail::parse_unsigned<int>(detail::required_attr(node, "rank", path), "rank", path);
    if (rank < 1) throw ParseError("rank must be >= 1 in " + path);

    std::optional<WeaknessClass> label, second;
    for (const auto& [ctag, child] : node) {
      if (ctag == "<xmlattr>" || ctag == "<xmlcomment>") continue;
      if (ctag == "class" && !label && !second) {
        label = read_class(child, path);
      } else if (ctag == "second-guess" && label && !second) {
        second = read_class(child, path);
      } else {
        throw ParseError("unexpected or misplaced <" + ctag + "> in warning for " + path);
      }
    }
    if (!label) throw ParseError("warning without <class> for " + path);
    r.warnings.push_back(Warning{path, *label, std::stod(score), rank, second, r.meta.config});
  }
  return r;
}

// --- Forensic Lucid ----------------------------------------------------------

namespace detail {

inline std::string lucid_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Evidential statement in which every scanned file is an observation
/// sequence and every warning one observation whose property is a nested
/// context [case, file [path, warning [class, score, rank]]]. The grammar is
/// given in docs/forensic-lucid.md.
inline std::string export_forensic_lucid(const std::vector<Warning>& warnings, const CaseMeta& meta) {
  std::map<std::string, std::vector<const Warning*>> by_file;
  const auto sorted = sorted_warnings(warnings);
  for (const auto& w : sorted) by_file[w.path].push_back(&w);

  std::string out;
  out += "// codewave warnings as a Forensic Lucid evidential statement\n";
  out += "// case " + detail::lucid_string(meta.case_name) + " version " + detail::lucid_string(meta.case_version) +
         " config " + detail::lucid_string(meta.config) + "\n";
  if (by_file.empty()) return out + "es = {};\n";

  out += "es = {";
  for (std::size_t i = 1; i <= by_file.size(); ++i) out += fmt::format("{}os{}", i == 1 ? "" : ", ", i);
  out += "}\nwhere\n";
  std::size_t seq = 0;
  for (const auto& [path, list] : by_file) {
    out += fmt::format("  os{} = (\n", ++seq);
    for (std::size_t k = 0; k < list.size(); ++k) {
      const Warning& w = *list[k];
      out += fmt::format(
          "    o([case: {}, file: [path: {}, warning: [class: [kind: {}, id: {}], score: {}, rank: {}]]], 1, 0){}\n",
          detail::lucid_string(meta.case_name), detail::lucid_string(path), detail::lucid_string(to_string(w.label.kind())),
          detail::lucid_string(w.label.id()), format_score(w.score), w.rank, k + 1 < list.size() ? "," : "");
    }
    out += "  );\n";
  }
  out += "end;\n";
  return out;
}

// --- precision tables ----------------------------------------------------------

/// One block per guess kind, rows numbered by rank within the block.
inline std::string export_stats_table(const std::vector<RunStats>& blocks) {
  std::string out = "guess | run | algorithms | good | bad | %\n";
  auto emit = [&](const RunStats& s, const std::vector<StatsRow>& rows) {
    auto ranked = rows;
    rank_rows(ranked);
    int run = 0;
    for (const auto& r : ranked) {
      out += fmt::format("{} | {} | {} | {} | {} | {}\n", to_string(s.guess), ++run, r.key, r.good, r.bad, r.percent());
    }
  };
  for (const auto& b : blocks) emit(b, b.per_config);
  const bool any_class = std::any_of(blocks.begin(), blocks.end(), [](const RunStats& b) { return !b.per_class.empty(); });
  if (any_class) {
    out += "guess | run | class | good | bad | %\n";
    for (const auto& b : blocks) emit(b, b.per_class);
  }
  return out;
}

inline std::string export_stats_table(const RunStats& stats) { return export_stats_table(std::vector<RunStats>{stats}); }

// --- images ------------------------------------------------------------------

struct GrayImage {
  std::size_t width = 1;
  std::size_t height = 1;
  std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(1, 0);  // row-major, top row first

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

inline GrayImage blank_image(std::size_t w, std::size_t h) { return GrayImage{w, h, std::vector<std::uint8_t>(w * h, 0)}; }

/// Binary portable graymap (P5), maxval 255.
inline std::string to_pgm(const GrayImage& img) {
  std::string out = fmt::format("P5\n{} {}\n255\n", img.width, img.height);
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

/// Amplitude polyline, white on black. Samples are grouped into at most
/// `max_width` buckets; each column spans the bucket's min..max and joins the
/// previous column's last sample.
inline GrayImage render_wave(const Signal& s, std::size_t max_width = 1024, std::size_t height = 256) {
  if (s.samples.empty()) return {};
  const std::size_t n = s.samples.size();
  const std::size_t bucket = (n + max_width - 1) / max_width;
  const std::size_t width = (n + bucket - 1) / bucket;
  GrayImage img = blank_image(width, height);
  auto row_of = [&](double a) {
    const double c = std::clamp(a, -1.0, 1.0);
    return static_cast<std::size_t>(std::lround((1.0 - c) / 2.0 * static_cast<double>(height - 1)));
  };
  std::optional<double> last;
  for (std::size_t x = 0; x < width; ++x) {
    const auto first = s.samples.begin() + static_cast<std::ptrdiff_t>(x * bucket);
    const auto end = s.samples.begin() + static_cast<std::ptrdiff_t>(std::min(n, (x + 1) * bucket));
    auto [lo, hi] = std::minmax_element(first, end);
    double top = *hi, bottom = *lo;
    if (last) {
      top = std::max(top, *last);
      bottom = std::min(bottom, *last);
    }
    for (std::size_t y = row_of(top); y <= row_of(bottom); ++y) img.at(x, y) = 255;
    last = *(end - 1);
  }
  return img;
}

/// Columns are non-overlapping windows (last one zero-padded), rows are the
/// lower window/2 frequency bins with DC at the bottom. Intensity is
/// log(1 + |X|) scaled so the strongest bin is 255.
inline GrayImage render_spectrogram(const Signal& s, std::size_t window = 256) {
  if (window < 2 || (window & (window - 1)) != 0) throw ConfigError("spectrogram window must be a power of two");
  if (s.samples.empty()) return {};
  const std::size_t cols = (s.samples.size() + window - 1) / window;
  const std::size_t rows = window / 2;
  std::vector<double> level(cols * rows, 0.0);
  double peak = 0.0;
  std::vector<dft::Complex> frame(window);
  for (std::size_t c = 0; c < cols; ++c) {
    std::fill(frame.begin(), frame.end(), dft::Complex{});
    for (std::size_t i = 0; i < window && c * window + i < s.samples.size(); ++i) frame[i] = s.samples[c * window + i];
    const auto spec = dft::forward(std::span<const dft::Complex>(frame));
    for (std::size_t k = 0; k < rows; ++k) {
      const double v = std::log1p(std::abs(spec[k]));
      level[k * cols + c] = v;
      peak = std::max(peak, v);
    }
  }
  GrayImage img = blank_image(cols, rows);
  if (peak == 0.0) return img;
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t c = 0; c < cols; ++c) {
      img.at(c, rows - 1 - k) = static_cast<std::uint8_t>(std::lround(255.0 * level[k * cols + c] / peak));
    }
  }
  return img;
}

// --- file naming -----------------------------------------------------------------

/// "report-<compressed config>-<case>.<ext>"
inline std::string report_filename(const PipelineConfig& cfg, const std::string& case_name, const std::string& ext) {
  return "report-" + cfg.compressed() + "-" + case_name + "." + ext;
}

/// Per-file image name: the scanned path flattened into the report stem.
inline std::string image_filename(const PipelineConfig& cfg, const std::string& case_name, const std::string& path,
                                  const std::string& kind) {
  std::string flat;
  for (char c : path) flat += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ? c : '-';
  return "report-" + cfg.compressed() + "-" + case_name + "-" + flat + "-" + kind + ".pgm";
}

}  // namespace codewave
