#pragma once

// Knowledge-base index: which files carry which CVE/CWE annotations.

#include <codewave/detail/atomic_write.hpp>
#include <codewave/detail/xml.hpp>
#include <codewave/error.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace codewave {

enum class WeaknessKind { cve, cwe };

inline std::string_view to_string(WeaknessKind k) { return k == WeaknessKind::cve ? "cve" : "cwe"; }

/// A CVE or CWE label. The kind is implied by the id, which is validated on
/// construction.
class WeaknessClass {
 public:
  static WeaknessClass from_id(std::string_view id) {
    static const std::regex cve_re(R"(CVE-\d{4}-\d+)");
    static const std::regex cwe_re(R"(CWE-\d+|NVD-CWE-Other|NVD-CWE-noinfo)");
    std::string s(id);
    if (std::regex_match(s, cve_re)) return WeaknessClass(WeaknessKind::cve, std::move(s));
    if (std::regex_match(s, cwe_re)) return WeaknessClass(WeaknessKind::cwe, std::move(s));
    throw ValidationError("not a CVE or CWE identifier: '" + s + "'");
  }

  WeaknessKind kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }

  // Ordering is by id so that ties between equally scored classes break
  // lexicographically.
  friend bool operator==(const WeaknessClass& a, const WeaknessClass& b) { return a.id_ == b.id_; }
  friend std::strong_ordering operator<=>(const WeaknessClass& a, const WeaknessClass& b) {
    return a.id_ <=> b.id_;
  }

 private:
  WeaknessClass(WeaknessKind k, std::string id) : kind_(k), id_(std::move(id)) {}

  WeaknessKind kind_;
  std::string id_;
};

enum class IssueKind { sink, path, fix };

inline std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::sink: return "sink";
    case IssueKind::path: return "path";
    case IssueKind::fix: return "fix";
  }
  return "sink";
}

struct Annotation {
  std::vector<std::uint32_t> lines;
  std::optional<std::string> fragment;
  std::optional<IssueKind> issue;
  std::optional<std::uint64_t> byte_offset;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ClassAnnotations {
  WeaknessClass label;
  std::vector<Annotation> annotations;

  friend bool operator==(const ClassAnnotations&, const ClassAnnotations&) = default;
};

enum class ContentKind { source, binary };

inline std::string_view to_string(ContentKind k) { return k == ContentKind::source ? "source" : "binary"; }

struct IndexEntry {
  std::string path;  // relative, '/'-separated
  std::vector<ClassAnnotations> classes;
  ContentKind content = ContentKind::source;

  bool has_class(const WeaknessClass& c) const {
    return std::any_of(classes.begin(), classes.end(), [&](const auto& ca) { return ca.label == c; });
  }

  /// Labels of the requested kind, in index order, without duplicates.
  std::vector<WeaknessClass> labels(WeaknessKind kind) const {
    std::vector<WeaknessClass> out;
    for (const auto& ca : classes) {
      if (ca.label.kind() == kind && std::find(out.begin(), out.end(), ca.label) == out.end()) {
        out.push_back(ca.label);
      }
    }
    return out;
  }

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

enum class IndexMode { train, test };

inline std::string_view to_string(IndexMode m) { return m == IndexMode::train ? "train" : "test"; }

struct TestCaseIndex {
  std::string case_name;
  std::string case_version;
  IndexMode mode = IndexMode::test;
  ContentKind content = ContentKind::source;
  std::vector<IndexEntry> entries;

  const IndexEntry* find(std::string_view path) const {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const IndexEntry& e) { return e.path == path; });
    return it == entries.end() ? nullptr : &*it;
  }

  friend bool operator==(const TestCaseIndex&, const TestCaseIndex&) = default;
};

/// Throws ValidationError on the first broken invariant.
inline void validate(const TestCaseIndex& index) {
  std::set<std::string_view> seen;
  for (const auto& e : index.entries) {
    if (e.path.empty()) throw ValidationError("index entry with empty path");
    if (!seen.insert(e.path).second) throw ValidationError("duplicate path in index: " + e.path);
    if (index.mode == IndexMode::train && e.classes.empty()) {
      throw ValidationError("train-mode entry without any class: " + e.path);
    }
    for (const auto& ca : e.classes) {
      for (const auto& a : ca.annotations) {
        if (std::find(a.lines.begin(), a.lines.end(), 0u) != a.lines.end()) {
          throw ValidationError("non-positive line number in " + e.path);
        }
        if (e.content == ContentKind::binary && (!a.lines.empty() || a.fragment)) {
          throw ValidationError("binary entry carries line or fragment data: " + e.path);
        }
      }
    }
  }
}

/// Builds an unannotated test-mode skeleton from every file under `root`
/// whose extension is in `extensions`. Paths are relative and sorted.
inline TestCaseIndex collect_files(const std::filesystem::path& root, const std::vector<std::string>& extensions) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.string());

  std::vector<std::string> paths;
  fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
  if (ec) throw IoError("cannot read directory " + root.string() + ": " + ec.message());
  for (fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw IoError("cannot read directory " + root.string() + ": " + ec.message());
    if (!it->is_regular_file(ec)) continue;
    const auto ext = it->path().extension().string();
    if (std::find(extensions.begin(), extensions.end(), ext) == extensions.end()) continue;
    paths.push_back(fs::relative(it->path(), root).generic_string());
  }
  std::sort(paths.begin(), paths.end());

  TestCaseIndex index;
  index.case_name = root.filename().string();
  index.mode = IndexMode::test;
  for (auto& p : paths) index.entries.push_back(IndexEntry{std::move(p), {}, ContentKind::source});
  return index;
}

/// Labels entries with CWE-<n>, where n is the first capture group of
/// `cwe_pattern` searched against the entry path.
inline TestCaseIndex annotate_synthetic(TestCaseIndex index, const std::string& cwe_pattern) {
  std::regex re;
  try {
    re = std::regex(cwe_pattern);
  } catch (const std::regex_error& e) {
    throw ConfigError("invalid CWE pattern '" + cwe_pattern + "': " + e.what());
  }
  if (re.mark_count() < 1) throw ConfigError("CWE pattern needs a capture group: " + cwe_pattern);

  for (auto& e : index.entries) {
    std::smatch m;
    if (!std::regex_search(e.path, m, re) || !m[1].matched) continue;
    const std::string digits = m[1].str();
    unsigned long number = 0;
    auto [ptr, err] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (err != std::errc{} || ptr != digits.data() + digits.size()) {
      throw ConfigError("CWE pattern captured a non-number '" + digits + "' from " + e.path);
    }
    auto label = WeaknessClass::from_id("CWE-" + std::to_string(number));
    if (!e.has_class(label)) e.classes.push_back(ClassAnnotations{label, {}});
  }
  return index;
}

struct BinaryIndexResult {
  TestCaseIndex index;
  std::size_t dropped = 0;
};

/// Rewrites source paths to their compiled counterparts (".java" -> ".class")
/// and strips everything line-based from the annotations. Entries whose
/// suffix has no mapping are dropped and counted.
inline BinaryIndexResult derive_binary_index(const TestCaseIndex& index,
                                             const std::map<std::string, std::string>& suffix_map) {
  BinaryIndexResult out;
  out.index.case_name = index.case_name;
  out.index.case_version = index.case_version;
  out.index.mode = index.mode;
  out.index.content = ContentKind::binary;

  for (const auto& e : index.entries) {
    std::filesystem::path p(e.path);
    auto mapped = suffix_map.find(p.extension().string());
    if (mapped == suffix_map.end()) {
      ++out.dropped;
      continue;
    }
    p.replace_extension(mapped->second);

    IndexEntry be{p.generic_string(), {}, ContentKind::binary};
    for (const auto& ca : e.classes) {
      ClassAnnotations stripped{ca.label, {}};
      for (const auto& a : ca.annotations) {
        stripped.annotations.push_back(Annotation{{}, std::nullopt, a.issue, a.byte_offset});
      }
      be.classes.push_back(std::move(stripped));
    }

    // Two sources compiling to one object (a.c, a.cc -> a.o) merge their labels.
    auto existing = std::find_if(out.index.entries.begin(), out.index.entries.end(),
                                 [&](const IndexEntry& x) { return x.path == be.path; });
    if (existing == out.index.entries.end()) {
      out.index.entries.push_back(std::move(be));
    } else {
      for (auto& ca : be.classes) {
        auto same = std::find_if(existing->classes.begin(), existing->classes.end(),
                                 [&](const auto& x) { return x.label == ca.label; });
        if (same == existing->classes.end()) {
          existing->classes.push_back(std::move(ca));
        } else {
          same->annotations.insert(same->annotations.end(), ca.annotations.begin(), ca.annotations.end());
        }
      }
    }
  }
  return out;
}

/// "case_train.xml" -> "case_train-bin.xml"
inline std::filesystem::path binary_index_filename(const std::filesystem::path& source_index) {
  auto out = source_index;
  out.replace_filename(source_index.stem().string() + "-bin" + source_index.extension().string());
  return out;
}

/// Keeps the first ceil(n/2) entries, in index order.
inline TestCaseIndex halve_training(TestCaseIndex index) {
  const auto keep = (index.entries.size() + 1) / 2;
  index.entries.resize(keep);
  return index;
}

// --- XML persistence -------------------------------------------------------

inline std::string to_xml(const TestCaseIndex& index) {
  using detail::xml_escape;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<index case=\"" << xml_escape(index.case_name) << "\" version=\"" << xml_escape(index.case_version)
     << "\" mode=\"" << to_string(index.mode) << "\" kind=\"" << to_string(index.content) << "\">\n";
  for (const auto& e : index.entries) {
    os << "  <file path=\"" << xml_escape(e.path) << "\"";
    if (e.classes.empty()) {
      os << "/>\n";
      continue;
    }
    os << ">\n";
    for (const auto& ca : e.classes) {
      os << "    <class kind=\"" << to_string(ca.label.kind()) << "\" id=\"" << xml_escape(ca.label.id()) << "\"";
      if (ca.annotations.empty()) {
        os << "/>\n";
        continue;
      }
      os << ">\n";
      for (const auto& a : ca.annotations) {
        os << "      <ann";
        if (!a.lines.empty()) {
          os << " line=\"";
          for (std::size_t i = 0; i < a.lines.size(); ++i) os << (i ? " " : "") << a.lines[i];
          os << "\"";
        }
        if (a.byte_offset) os << " offset=\"" << *a.byte_offset << "\"";
        if (a.issue) os << " issue=\"" << to_string(*a.issue) << "\"";
        if (a.fragment && !a.fragment->empty()) {
          os << ">" << xml_escape(*a.fragment) << "</ann>\n";
        } else {
          os << "/>\n";
        }
      }
      os << "    </class>\n";
    }
    os << "  </file>\n";
  }
  os << "</index>\n";
  return os.str();
}

namespace detail {

template <typename T>
T parse_unsigned(std::string_view text, std::string_view what, std::string_view where) {
  T value{};
  auto [ptr, err] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (err != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("bad " + std::string(what) + " '" + std::string(text) + "' in entry " + std::string(where));
  }
  return value;
}

inline std::string required_attr(const boost::property_tree::ptree& node, const char* name, std::string_view where) {
  auto v = node.get_optional<std::string>(std::string("<xmlattr>.") + name);
  if (!v) throw ParseError("missing attribute '" + std::string(name) + "' in " + std::string(where));
  return *v;
}

}  // namespace detail

inline TestCaseIndex index_from_xml(const std::string& xml) {
  namespace pt = boost::property_tree;
  pt::ptree doc;
  try {
    std::istringstream is(xml);
    pt::read_xml(is, doc);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("index XML is not well-formed: ") + e.what());
  }
  auto root = doc.get_child_optional("index");
  if (!root) throw ParseError("index XML lacks an <index> root element");

  TestCaseIndex index;
  index.case_name = detail::required_attr(*root, "case", "<index>");
  index.case_version = root->get<std::string>("<xmlattr>.version", "");
  const auto mode = detail::required_attr(*root, "mode", "<index>");
  if (mode == "train") index.mode = IndexMode::train;
  else if (mode == "test") index.mode = IndexMode::test;
  else throw ParseError("index mode must be train or test, got '" + mode + "'");
  const auto kind = root->get<std::string>("<xmlattr>.kind", "source");
  if (kind == "source") index.content = ContentKind::source;
  else if (kind == "binary") index.content = ContentKind::binary;
  else throw ParseError("index kind must be source or binary, got '" + kind + "'");

  std::set<std::string> seen;
  for (const auto& [tag, file] : *root) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag != "file") throw ParseError("unexpected element <" + tag + "> under <index>");
    IndexEntry entry;
    entry.path = detail::required_attr(file, "path", "<file>");
    if (entry.path.empty()) throw ParseError("<file> with empty path");
    if (!seen.insert(entry.path).second) throw ParseError("duplicate path in index: " + entry.path);
    entry.content = index.content;
    for (const auto& [ctag, cls] : file) {
      if (ctag == "<xmlattr>" || ctag == "<xmlcomment>") continue;
      if (ctag != "class") throw ParseError("unexpected element <" + ctag + "> in entry " + entry.path);
      const auto id = detail::required_attr(cls, "id", entry.path);
      WeaknessClass label = [&] {
        try {
          return WeaknessClass::from_id(id);
        } catch (const ValidationError& e) {
          throw ParseError(std::string(e.what()) + " in entry " + entry.path);
        }
      }();
      const auto ckind = detail::required_attr(cls, "kind", entry.path);
      if (ckind != to_string(label.kind())) {
        throw ParseError("class kind '" + ckind + "' does not match id " + id + " in entry " + entry.path);
      }
      ClassAnnotations ca{label, {}};
      for (const auto& [atag, ann] : cls) {
        if (atag == "<xmlattr>" || atag == "<xmlcomment>") continue;
        if (atag != "ann") throw ParseError("unexpected element <" + atag + "> in entry " + entry.path);
        Annotation a;
        if (auto lines = ann.get_optional<std::string>("<xmlattr>.line")) {
          std::istringstream ls(*lines);
          std::string tok;
          while (ls >> tok) a.lines.push_back(detail::parse_unsigned<std::uint32_t>(tok, "line", entry.path));
        }
        if (auto off = ann.get_optional<std::string>("<xmlattr>.offset")) {
          a.byte_offset = detail::parse_unsigned<std::uint64_t>(*off, "offset", entry.path);
        }
        if (auto issue = ann.get_optional<std::string>("<xmlattr>.issue")) {
          if (*issue == "sink") a.issue = IssueKind::sink;
          else if (*issue == "path") a.issue = IssueKind::path;
          else if (*issue == "fix") a.issue = IssueKind::fix;
          else throw ParseError("unknown issue kind '" + *issue + "' in entry " + entry.path);
        }
        if (!ann.data().empty()) a.fragment = ann.data();
        ca.annotations.push_back(std::move(a));
      }
      entry.classes.push_back(std::move(ca));
    }
    index.entries.push_back(std::move(entry));
  }

  validate(index);
  return index;
}

inline TestCaseIndex load_index(const std::filesystem::path& file) {
  return index_from_xml(detail::read_file(file));
}

inline void write_index(const TestCaseIndex& index, const std::filesystem::path& file) {
  validate(index);
  detail::atomic_write(file, to_xml(index));
}

}  // namespace codewave
