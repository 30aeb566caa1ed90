#pragma once

// The codewave command-line front end. Pipeline flags (-cweid -raw -fft
// -cheb ...) are pulled out first; whatever remains is parsed per command.
//
// Exit codes: 0 success, 1 validation / usage / configuration error,
// 2 I/O or transport error.

#include <codewave/corpus_index.hpp>
#include <codewave/detail/atomic_write.hpp>
#include <codewave/detail/parallel.hpp>
#include <codewave/dnet.hpp>
#include <codewave/engine.hpp>
#include <codewave/error.hpp>
#include <codewave/options.hpp>
#include <codewave/preprocess.hpp>
#include <codewave/report.hpp>
#include <codewave/signal.hpp>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

namespace codewave::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInvalid = 1, kIoFailure = 2 };

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::atomic<bool>& shutdown_requested() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void on_signal(int) { shutdown_requested().store(true); }

inline fs::path default_root(const fs::path& index_file) {
  auto parent = index_file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

inline std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline dnet::Endpoint store_endpoint(const std::string& flag_value) {
  if (!flag_value.empty()) return dnet::parse_endpoint(flag_value);
  if (const char* env = std::getenv("CODEWAVE_STORE"); env && *env) return dnet::parse_endpoint(env);
  throw ConfigError("no demand store address: pass --store or set CODEWAVE_STORE=<host:port>");
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  return fmt::format("generated {:%Y-%m-%dT%H:%M:%S}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

// Writes the spectrogram and waveform images requested by the output flags.
inline void write_images(const TestCaseIndex& index, const fs::path& root, const PipelineConfig& cfg,
                         const fs::path& out_dir) {
  if (!cfg.outputs.spectrogram && !cfg.outputs.graph) return;
  for (const auto& e : index.entries) {
    const auto signal = preprocess(load_signal(root / e.path, cfg.loader_ngram), cfg.filter);
    if (cfg.outputs.spectrogram) {
      codewave::detail::atomic_write(out_dir / image_filename(cfg, index.case_name, e.path, "spectrogram"),
                                     to_pgm(render_spectrogram(signal)));
    }
    if (cfg.outputs.graph) {
      codewave::detail::atomic_write(out_dir / image_filename(cfg, index.case_name, e.path, "wave"),
                                     to_pgm(render_wave(signal)));
    }
  }
}

}  // namespace detail

/// Runs one command; `args` excludes the program name.
inline int run(std::span<const std::string> args, Streams io) {
  using codewave::detail::atomic_write;
  using codewave::detail::default_jobs;

  CLI::App app{"codewave: signal and n-gram classification of source and binary files"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  unsigned jobs = default_jobs();
  std::string index_path, root_path, model_path, out_path, out_dir = ".", truth_path, store_addr;
  std::string train_index_path, train_root_path, test_index_path, test_root_path;

  auto add_jobs = [&](CLI::App* c) { c->add_option("--jobs,-j", jobs, "Parallel workers")->check(CLI::PositiveNumber); };

  // collect
  std::string case_name, case_version, extensions = ".c,.h,.cc,.cpp,.hpp,.java", cwe_pattern;
  auto* collect = app.add_subcommand("collect", "Build an index skeleton from a directory of files");
  collect->add_option("--root", root_path, "Directory to scan")->required();
  collect->add_option("--out", out_path, "Index file to write")->required();
  collect->add_option("--case", case_name, "Test case name (default: directory name)");
  collect->add_option("--case-version", case_version, "Test case version");
  collect->add_option("--ext", extensions, "Comma-separated file extensions");
  collect->add_option("--cwe-pattern", cwe_pattern, "Regex whose first group is a CWE number in the path");

  // binary-index
  std::string suffix_map = ".java=.class,.c=.o,.cc=.o,.cpp=.o";
  auto* binary = app.add_subcommand("binary-index", "Derive a compiled-file index from a source index");
  binary->add_option("--index", index_path, "Source index")->required();
  binary->add_option("--out", out_path, "Output index (default: <index>-bin.xml)");
  binary->add_option("--map", suffix_map, "Comma-separated src=bin suffix pairs");

  // halve
  auto* halve = app.add_subcommand("halve", "Keep the first half of a training index");
  halve->add_option("--index", index_path, "Training index")->required();
  halve->add_option("--out", out_path, "Output index")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model from an annotated index");
  train->add_option("--index", index_path, "Training index")->required();
  train->add_option("--root", root_path, "Corpus root (default: index directory)");
  train->add_option("--model", model_path, "Model file (default: model-<config>-<case>.cwm)");
  add_jobs(train);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Print the loosest threshold accepting every training file");
  calibrate->add_option("--index", index_path, "Training index")->required();
  calibrate->add_option("--root", root_path, "Corpus root (default: index directory)");
  calibrate->add_option("--model", model_path, "Model file")->required();
  add_jobs(calibrate);

  // test
  bool distributed = false, timestamp = false;
  auto* test = app.add_subcommand("test", "Classify a test case and write reports");
  test->add_option("--index", index_path, "Test index")->required();
  test->add_option("--root", root_path, "Corpus root (default: index directory)");
  test->add_option("--model", model_path, "Model file (not needed with --distributed)");
  test->add_option("--truth", truth_path, "Annotated index to score the warnings against");
  test->add_option("--out-dir", out_dir, "Report directory");
  test->add_flag("--timestamp", timestamp, "Put a generation time comment in the XML report");
  test->add_flag("--distributed", distributed, "Act as generator against a demand store");
  test->add_option("--store", store_addr, "Demand store host:port (default: $CODEWAVE_STORE)");
  add_jobs(test);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every configuration of the default grid and rank them");
  sweep_cmd->add_option("--train-index", train_index_path, "Training index")->required();
  sweep_cmd->add_option("--train-root", train_root_path, "Training corpus root");
  sweep_cmd->add_option("--test-index", test_index_path, "Test index")->required();
  sweep_cmd->add_option("--test-root", test_root_path, "Test corpus root");
  sweep_cmd->add_option("--truth", truth_path, "Ground truth index (default: the test index)");
  add_jobs(sweep_cmd);

  // serve
  std::string listen = "127.0.0.1:0";
  double lease_seconds = 60.0;
  auto* serve = app.add_subcommand("serve", "Run the demand store");
  serve->add_option("--listen", listen, "host:port to listen on (port 0 picks one)");
  serve->add_option("--lease-seconds", lease_seconds, "Worker lease timeout")->check(CLI::PositiveNumber);

  // work
  std::string worker_id = fmt::format("worker-{}", ::getpid());
  int idle_exit_ms = 5000;
  std::optional<std::size_t> crash_after;
  auto* work = app.add_subcommand("work", "Run a classification worker against a demand store");
  work->add_option("--model", model_path, "Model file")->required();
  work->add_option("--root", root_path, "Local copy of the test corpus")->required();
  work->add_option("--store", store_addr, "Demand store host:port (default: $CODEWAVE_STORE)");
  work->add_option("--worker-id", worker_id, "Worker name reported to the store");
  work->add_option("--idle-exit-ms", idle_exit_ms, "Exit after this long without work");
  work->add_option("--crash-after", crash_after, "Abandon a leased demand after N completions (testing)");

  // report
  std::string input_path;
  auto* report = app.add_subcommand("report", "Validate a SATE report and convert or score it");
  report->add_option("--input", input_path, "SATE XML report")->required();
  report->add_option("--truth", truth_path, "Annotated index to score the report against");
  report->add_option("--out", out_path, "Write Forensic Lucid here (with -flucid)");

  try {
    auto parsed = parse_options(args);
    const PipelineConfig& cfg = parsed.config;

    std::vector<std::string> rest(parsed.rest.rbegin(), parsed.rest.rend());
    try {
      app.parse(rest);
    } catch (const CLI::CallForHelp&) {
      io.out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      io.out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      io.err << "usage error: " << e.what() << "\n";
      return kInvalid;
    }

    auto root_for = [&](const fs::path& index_file) {
      return root_path.empty() ? detail::default_root(index_file) : fs::path(root_path);
    };

    if (collect->parsed()) {
      auto index = collect_files(root_path, detail::split_list(extensions, ','));
      if (!case_name.empty()) index.case_name = case_name;
      index.case_version = case_version;
      if (!cwe_pattern.empty()) {
        index = annotate_synthetic(std::move(index), cwe_pattern);
        const bool all_labelled =
            std::all_of(index.entries.begin(), index.entries.end(), [](const auto& e) { return !e.classes.empty(); });
        if (all_labelled && !index.entries.empty()) index.mode = IndexMode::train;
      }
      write_index(index, out_path);
      io.out << fmt::format("{} files indexed into {}\n", index.entries.size(), out_path);
      return kOk;
    }

    if (binary->parsed()) {
      std::map<std::string, std::string> mapping;
      for (const auto& pair : detail::split_list(suffix_map, ',')) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos) throw UsageError("bad suffix pair '" + pair + "', expected src=bin");
        mapping[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
      const auto result = derive_binary_index(load_index(index_path), mapping);
      const fs::path target = out_path.empty() ? binary_index_filename(index_path) : fs::path(out_path);
      write_index(result.index, target);
      io.out << fmt::format("{} entries written to {}, {} without a compiled counterpart dropped\n",
                            result.index.entries.size(), target.string(), result.dropped);
      return kOk;
    }

    if (halve->parsed()) {
      const auto index = halve_training(load_index(index_path));
      write_index(index, out_path);
      io.out << fmt::format("{} entries kept in {}\n", index.entries.size(), out_path);
      return kOk;
    }

    if (train->parsed()) {
      const auto index = load_index(index_path);
      const auto model = train_case(index, root_for(index_path), cfg, jobs);
      const fs::path target =
          model_path.empty() ? fs::path("model-" + cfg.compressed() + "-" + index.case_name + ".cwm") : fs::path(model_path);
      save_model(model, target);
      io.out << fmt::format("{} classes trained into {}\n", model_class_count(model), target.string());
      return kOk;
    }

    if (calibrate->parsed()) {
      const auto index = load_index(index_path);
      const auto model = load_model(model_path);
      const auto results = classify_case(index, root_for(index_path), model, cfg, jobs);
      io.out << fmt::format("--threshold={}\n", calibrate_threshold(results));
      return kOk;
    }

    if (test->parsed()) {
      const auto index = load_index(index_path);
      const auto root = root_for(index_path);
      std::vector<FileResult> results;
      if (distributed) {
        dnet::StoreClient client(detail::store_endpoint(store_addr));
        results = dnet::run_generator(client, index, root, cfg);
      } else {
        if (model_path.empty()) throw UsageError("test needs --model unless --distributed is given");
        results = classify_case(index, root, load_model(model_path), cfg, jobs);
      }
      const auto warnings = make_warnings(results, cfg);
      const CaseMeta meta{index.case_name, index.case_version, cfg.option_string()};
      ExportOptions opts;
      if (timestamp) opts.header_comment = detail::utc_timestamp();

      const fs::path dir(out_dir);
      fs::create_directories(dir);
      const auto xml_file = dir / report_filename(cfg, index.case_name, "xml");
      atomic_write(xml_file, export_sate_xml(warnings, meta, opts));
      if (cfg.outputs.flucid) {
        atomic_write(dir / report_filename(cfg, index.case_name, "ipl"), export_forensic_lucid(warnings, meta));
      }
      detail::write_images(index, root, cfg, dir);
      io.out << fmt::format("{} warnings for {} files written to {}\n", warnings.size(), index.entries.size(),
                            xml_file.string());

      if (!truth_path.empty()) {
        const auto ev = score_stats(warnings, load_index(truth_path), cfg.class_kind, cfg.option_string());
        const auto table = export_stats_table(std::vector<RunStats>{ev.first, ev.second});
        atomic_write(dir / report_filename(cfg, index.case_name, "txt"), table);
        io.out << table;
        for (const auto& d : recall_diagnostics(ev)) io.err << "warning: " << d << "\n";
      }
      return kOk;
    }

    if (sweep_cmd->parsed()) {
      const auto train_index = load_index(train_index_path);
      const auto test_index = load_index(test_index_path);
      const auto truth = truth_path.empty() ? test_index : load_index(truth_path);
      const SweepInputs in{train_index,
                           train_root_path.empty() ? detail::default_root(train_index_path) : fs::path(train_root_path),
                           test_index,
                           test_root_path.empty() ? detail::default_root(test_index_path) : fs::path(test_root_path),
                           truth};
      const auto result = sweep(in, default_grid(cfg.class_kind), jobs);
      io.out << export_stats_table(std::vector<RunStats>{result.first, result.second});
      for (const auto& row : result.rows) {
        if (!row.error.empty()) io.err << "error: " << row.config.option_string() << ": " << row.error << "\n";
      }
      for (const auto& d : result.diagnostics) io.err << "warning: " << d << "\n";
      return kOk;
    }

    if (serve->parsed()) {
      const auto ep = dnet::parse_endpoint(listen);
      dnet::DemandStore store(std::chrono::milliseconds(static_cast<long long>(lease_seconds * 1000.0)));
      dnet::StoreServer server(store, ep.host, ep.port);
      server.start();
      io.out << fmt::format("listening on {}:{}\n", ep.host, server.port()) << std::flush;
      detail::shutdown_requested().store(false);
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      while (!detail::shutdown_requested().load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
      const auto c = store.counters();
      io.out << fmt::format("{} demands, {} results stored, {} lease expiries\n", store.size(), c.results_stored,
                            c.lease_expiries);
      return kOk;
    }

    if (work->parsed()) {
      dnet::StoreClient client(detail::store_endpoint(store_addr));
      dnet::WorkerOptions opts;
      opts.idle_exit = std::chrono::milliseconds(idle_exit_ms);
      opts.crash_after = crash_after;
      const auto r = dnet::run_worker(client, worker_id, load_model(model_path), root_path, cfg, opts);
      io.out << fmt::format("{} completed {} demands{}\n", worker_id, r.completed, r.crashed ? " then crashed" : "");
      return kOk;
    }

    if (report->parsed()) {
      const auto parsed_report = parse_sate_xml(codewave::detail::read_file(input_path));
      const auto report_cfg = parse_option_string(parsed_report.meta.config);
      io.out << fmt::format("{} warnings for case {}\n", parsed_report.warnings.size(), parsed_report.meta.case_name);
      if (cfg.outputs.flucid) {
        const auto lucid = export_forensic_lucid(parsed_report.warnings, parsed_report.meta);
        if (out_path.empty()) io.out << lucid;
        else atomic_write(out_path, lucid);
      }
      if (!truth_path.empty()) {
        const auto ev = score_stats(parsed_report.warnings, load_index(truth_path), report_cfg.class_kind,
                                    parsed_report.meta.config);
        io.out << export_stats_table(std::vector<RunStats>{ev.first, ev.second});
        for (const auto& d : recall_diagnostics(ev)) io.err << "warning: " << d << "\n";
      }
      return kOk;
    }
  } catch (const IoError& e) {
    io.err << "i/o error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const TransportError& e) {
    io.err << "transport error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ProtocolError& e) {
    io.err << "protocol error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    io.err << "i/o error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const UsageError& e) {
    io.err << "usage error: " << e.what() << "\n";
    return kInvalid;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace codewave::cli
