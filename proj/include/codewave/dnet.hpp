#pragma once

// Demand-driven distributed classification. A generator deposits one demand
// per file into the demand store; workers lease pending demands, classify the
// file against their local model, and deposit the ResultSet back under the
// same signature; the generator harvests computed results and builds the
// report exactly as a single-process run would.
//
// Wire format (docs/wire-protocol.md): every message is a 4-byte big-endian
// length followed by a UTF-8 JSON object {"type", "signature", "payload"}.

#include <codewave/classify.hpp>
#include <codewave/corpus_index.hpp>
#include <codewave/detail/atomic_write.hpp>
#include <codewave/engine.hpp>
#include <codewave/error.hpp>
#include <codewave/options.hpp>

#include <boost/asio.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace codewave::dnet {

using json = nlohmann::json;
using namespace std::chrono_literals;

// --- signatures --------------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

/// Lowercase hex SHA-256 over case, path, option string and the SHA-256 of
/// the file content, NUL-separated. Editing a file invalidates its cache entry.
inline std::string demand_signature(std::string_view case_name, std::string_view path, std::string_view option_string,
                                    std::string_view content) {
  std::string material;
  material.append(case_name).push_back('\0');
  material.append(path).push_back('\0');
  material.append(option_string).push_back('\0');
  material.append(sha256_hex(content));
  return sha256_hex(material);
}

// --- demand store ------------------------------------------------------------

struct FileItem {
  std::string path;
  ContentKind content = ContentKind::source;

  friend bool operator==(const FileItem&, const FileItem&) = default;
};

enum class DemandState { pending, in_progress, computed };

inline std::string_view to_string(DemandState s) {
  switch (s) {
    case DemandState::pending: return "pending";
    case DemandState::in_progress: return "in_progress";
    case DemandState::computed: return "computed";
  }
  return "pending";
}

struct Demand {
  std::string signature;
  FileItem item;
  DemandState state = DemandState::pending;
  std::optional<ResultSet> result;  // present iff computed
};

struct DepositReply {
  DemandState state = DemandState::pending;
  bool created = false;  // false: signature already known (cached or in flight)
};

enum class ResultOutcome { stored, duplicate, conflict_ignored };

inline std::string_view to_string(ResultOutcome o) {
  switch (o) {
    case ResultOutcome::stored: return "stored";
    case ResultOutcome::duplicate: return "duplicate";
    case ResultOutcome::conflict_ignored: return "conflict_ignored";
  }
  return "stored";
}

using Harvest = std::vector<std::pair<std::string, ResultSet>>;

/// Operations shared by the in-process store and the network client.
class DemandStoreApi {
 public:
  virtual ~DemandStoreApi() = default;
  virtual DepositReply deposit(const std::string& signature, const FileItem& item) = 0;
  virtual std::optional<Demand> pickup(const std::string& worker_id) = 0;
  virtual ResultOutcome deposit_result(const std::string& signature, const std::string& worker_id,
                                       const ResultSet& result) = 0;
  /// Computed results among `expected`, in the order given.
  virtual Harvest harvest(const std::vector<std::string>& expected) = 0;
};

struct StoreCounters {
  std::size_t deposits = 0;
  std::size_t duplicate_deposits = 0;
  std::size_t pickups = 0;
  std::size_t lease_expiries = 0;
  std::size_t results_stored = 0;
  std::size_t duplicate_results = 0;
  std::size_t conflicts = 0;
};

/// Single authority for demand state. Transitions: pending -> in_progress ->
/// computed, plus in_progress -> pending when a lease expires. The first
/// result deposited for a signature wins.
class DemandStore final : public DemandStoreApi {
 public:
  using Clock = std::chrono::steady_clock;

  explicit DemandStore(std::chrono::milliseconds lease_timeout = 60s,
                       std::function<Clock::time_point()> now = [] { return Clock::now(); })
      : lease_timeout_(lease_timeout), now_(std::move(now)) {}

  DepositReply deposit(const std::string& signature, const FileItem& item) override {
    std::lock_guard lock(mutex_);
    auto it = demands_.find(signature);
    if (it != demands_.end()) {
      ++counters_.duplicate_deposits;
      return {it->second.demand.state, false};
    }
    Slot slot{Demand{signature, item, DemandState::pending, std::nullopt}, next_seq_++, {}, {}};
    pending_.emplace(slot.seq, signature);
    demands_.emplace(signature, std::move(slot));
    ++counters_.deposits;
    return {DemandState::pending, true};
  }

  std::optional<Demand> pickup(const std::string& worker_id) override {
    std::lock_guard lock(mutex_);
    expire_leases();
    if (pending_.empty()) return std::nullopt;
    auto first = pending_.begin();
    auto& slot = demands_.at(first->second);
    pending_.erase(first);
    slot.demand.state = DemandState::in_progress;
    slot.worker = worker_id;
    slot.lease_expiry = now_() + lease_timeout_;
    ++counters_.pickups;
    return slot.demand;
  }

  ResultOutcome deposit_result(const std::string& signature, const std::string& worker_id,
                               const ResultSet& result) override {
    std::lock_guard lock(mutex_);
    auto it = demands_.find(signature);
    if (it == demands_.end()) throw ProtocolError("result for unknown demand signature " + signature);
    auto& slot = it->second;
    if (slot.demand.state == DemandState::computed) {
      if (*slot.demand.result == result) {
        ++counters_.duplicate_results;
        return ResultOutcome::duplicate;
      }
      ++counters_.conflicts;
      return ResultOutcome::conflict_ignored;
    }
    // A late result from an expired lease is as good as any other: accept it.
    if (slot.demand.state == DemandState::pending) pending_.erase(slot.seq);
    slot.demand.state = DemandState::computed;
    slot.demand.result = result;
    slot.worker = worker_id;
    ++counters_.results_stored;
    return ResultOutcome::stored;
  }

  Harvest harvest(const std::vector<std::string>& expected) override {
    std::lock_guard lock(mutex_);
    Harvest out;
    for (const auto& sig : expected) {
      auto it = demands_.find(sig);
      if (it != demands_.end() && it->second.demand.state == DemandState::computed) {
        out.emplace_back(sig, *it->second.demand.result);
      }
    }
    return out;
  }

  std::optional<Demand> find(const std::string& signature) const {
    std::lock_guard lock(mutex_);
    auto it = demands_.find(signature);
    if (it == demands_.end()) return std::nullopt;
    return it->second.demand;
  }

  StoreCounters counters() const {
    std::lock_guard lock(mutex_);
    return counters_;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return demands_.size();
  }

 private:
  struct Slot {
    Demand demand;
    std::uint64_t seq = 0;
    std::string worker;
    Clock::time_point lease_expiry;
  };

  void expire_leases() {
    const auto now = now_();
    for (auto& [sig, slot] : demands_) {
      if (slot.demand.state == DemandState::in_progress && slot.lease_expiry <= now) {
        slot.demand.state = DemandState::pending;
        slot.worker.clear();
        pending_.emplace(slot.seq, sig);
        ++counters_.lease_expiries;
      }
    }
  }

  mutable std::mutex mutex_;
  std::chrono::milliseconds lease_timeout_;
  std::function<Clock::time_point()> now_;
  std::map<std::string, Slot> demands_;
  std::map<std::uint64_t, std::string> pending_;  // oldest first
  std::uint64_t next_seq_ = 0;
  StoreCounters counters_;
};

// --- wire format -------------------------------------------------------------

inline constexpr std::uint32_t kMaxFrame = 64u << 20;

struct Message {
  std::string type;  // DEPOSIT, PICKUP, RESULT, HARVEST, ACK
  std::string signature;
  json payload = json::object();

  friend bool operator==(const Message&, const Message&) = default;
};

inline std::string encode_frame(const Message& m) {
  const std::string body = json{{"type", m.type}, {"signature", m.signature}, {"payload", m.payload}}.dump();
  if (body.size() > kMaxFrame) throw ProtocolError("message too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(4 + body.size());
  for (int shift : {24, 16, 8, 0}) frame.push_back(static_cast<char>((n >> shift) & 0xFF));
  return frame + body;
}

inline std::uint32_t decode_length(std::span<const std::uint8_t, 4> header) {
  const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                          (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (n > kMaxFrame) throw ProtocolError("frame length " + std::to_string(n) + " exceeds limit");
  return n;
}

inline Message decode_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message body: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ProtocolError("message lacks a string 'type'");
  }
  Message m;
  m.type = j["type"].get<std::string>();
  if (j.contains("signature") && j["signature"].is_string()) m.signature = j["signature"].get<std::string>();
  if (j.contains("payload")) m.payload = j["payload"];
  return m;
}

inline Message decode_frame(std::string_view frame) {
  if (frame.size() < 4) throw ProtocolError("frame shorter than its header");
  const auto* p = reinterpret_cast<const std::uint8_t*>(frame.data());
  const auto n = decode_length(std::span<const std::uint8_t, 4>(p, 4));
  if (frame.size() - 4 != n) throw ProtocolError("frame length does not match body");
  return decode_body(frame.substr(4));
}

// Scores may be infinite (an MLE model that cannot produce a document).
inline json score_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double score_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ProtocolError("bad score value " + j.dump());
}

inline json to_json(const ResultSet& r) {
  json arr = json::array();
  for (const auto& x : r.ranked) arr.push_back({{"id", x.label.id()}, {"score", score_to_json(x.score)}});
  return arr;
}

inline ResultSet result_from_json(const json& j) {
  if (!j.is_array()) throw ProtocolError("result must be an array");
  ResultSet r;
  for (const auto& x : j) {
    try {
      r.ranked.push_back({WeaknessClass::from_id(x.at("id").get<std::string>()), score_from_json(x.at("score"))});
    } catch (const ValidationError& e) {
      throw ProtocolError(e.what());
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("bad result entry: ") + e.what());
    }
  }
  return r;
}

inline json to_json(const FileItem& f) { return {{"path", f.path}, {"content_kind", std::string(to_string(f.content))}}; }

inline FileItem file_item_from_json(const json& j) {
  try {
    FileItem f;
    f.path = j.at("path").get<std::string>();
    const auto kind = j.value("content_kind", std::string("source"));
    if (kind == "source") f.content = ContentKind::source;
    else if (kind == "binary") f.content = ContentKind::binary;
    else throw ProtocolError("bad content_kind '" + kind + "'");
    return f;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad file item: ") + e.what());
  }
}

inline Message ack(std::string signature, json payload) {
  payload["ok"] = true;
  return Message{"ACK", std::move(signature), std::move(payload)};
}

inline Message error_ack(std::string signature, const std::string& what) {
  return Message{"ACK", std::move(signature), json{{"ok", false}, {"error", what}}};
}

/// Applies one request to the store and builds the reply. Protocol errors
/// become an ACK with ok=false rather than dropping the connection.
inline Message handle_request(DemandStoreApi& store, const Message& req) {
  try {
    const auto& p = req.payload;
    if (req.type == "DEPOSIT") {
      if (req.signature.empty()) throw ProtocolError("DEPOSIT without signature");
      const auto r = store.deposit(req.signature, file_item_from_json(p));
      return ack(req.signature, {{"state", std::string(to_string(r.state))}, {"created", r.created}});
    }
    if (req.type == "PICKUP") {
      const auto d = store.pickup(p.value("worker", std::string{}));
      if (!d) return ack("", {{"demand", nullptr}});
      return ack(d->signature, {{"demand", to_json(d->item)}});
    }
    if (req.type == "RESULT") {
      if (!p.contains("result")) throw ProtocolError("RESULT without result");
      const auto outcome =
          store.deposit_result(req.signature, p.value("worker", std::string{}), result_from_json(p["result"]));
      return ack(req.signature, {{"outcome", std::string(to_string(outcome))}});
    }
    if (req.type == "HARVEST") {
      std::vector<std::string> sigs;
      for (const auto& s : p.value("signatures", json::array())) sigs.push_back(s.get<std::string>());
      json results = json::array();
      for (const auto& [sig, r] : store.harvest(sigs)) results.push_back({{"signature", sig}, {"result", to_json(r)}});
      return ack("", {{"results", std::move(results)}});
    }
    throw ProtocolError("unknown message type '" + req.type + "'");
  } catch (const ProtocolError& e) {
    return error_ack(req.signature, e.what());
  } catch (const json::exception& e) {
    return error_ack(req.signature, std::string("malformed payload: ") + e.what());
  }
}

// --- TCP server ----------------------------------------------------------------

/// Serves a DemandStore over TCP. All requests are handled on one I/O thread,
/// so state transitions are serialized at message granularity.
class StoreServer {
 public:
  StoreServer(DemandStoreApi& store, const std::string& host = "127.0.0.1", std::uint16_t port = 0)
      : store_(store), acceptor_(io_) {
    namespace ip = boost::asio::ip;
    boost::system::error_code ec;
    const ip::tcp::endpoint ep(ip::make_address(host, ec), port);
    if (ec) throw TransportError("bad listen address '" + host + "'");
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(ip::tcp::acceptor::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(boost::asio::socket_base::max_listen_connections, ec);
    if (ec) throw TransportError("cannot listen on " + host + ":" + std::to_string(port) + ": " + ec.message());
  }

  ~StoreServer() { stop(); }

  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    accept();
    thread_ = std::thread([this] { io_.run(); });
  }

  /// Blocks the calling thread until stop() is called from elsewhere.
  void run() {
    accept();
    io_.run();
  }

  void stop() {
    io_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  class Session : public std::enable_shared_from_this<Session> {
   public:
    Session(boost::asio::ip::tcp::socket socket, DemandStoreApi& store) : socket_(std::move(socket)), store_(store) {}

    void start() { read_header(); }

   private:
    void read_header() {
      auto self = shared_from_this();
      boost::asio::async_read(socket_, boost::asio::buffer(header_), [self](auto ec, std::size_t) {
        if (ec) return;
        try {
          self->body_.resize(decode_length(std::span<const std::uint8_t, 4>(self->header_)));
        } catch (const ProtocolError&) {
          return;  // oversized frame: drop the connection
        }
        self->read_body();
      });
    }

    void read_body() {
      auto self = shared_from_this();
      boost::asio::async_read(socket_, boost::asio::buffer(body_), [self](auto ec, std::size_t) {
        if (ec) return;
        Message reply;
        try {
          reply = handle_request(self->store_, decode_body(self->body_));
        } catch (const ProtocolError& e) {
          reply = error_ack("", e.what());
        }
        self->out_ = encode_frame(reply);
        boost::asio::async_write(self->socket_, boost::asio::buffer(self->out_), [self](auto wec, std::size_t) {
          if (!wec) self->read_header();
        });
      });
    }

    boost::asio::ip::tcp::socket socket_;
    DemandStoreApi& store_;
    std::array<std::uint8_t, 4> header_{};
    std::string body_;
    std::string out_;
  };

  void accept() {
    acceptor_.async_accept([this](boost::system::error_code ec, boost::asio::ip::tcp::socket socket) {
      if (!ec) std::make_shared<Session>(std::move(socket), store_)->start();
      if (acceptor_.is_open()) accept();
    });
  }

  DemandStoreApi& store_;
  boost::asio::io_context io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  std::thread thread_;
};

// --- TCP client ----------------------------------------------------------------

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port"
inline Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw ConfigError("store address must be host:port, got '" + std::string(text) + "'");
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  if (ep.host.empty()) ep.host = "127.0.0.1";
  ep.port = detail::parse_number<std::uint16_t>("store port", text.substr(colon + 1));
  return ep;
}

/// Synchronous client. A dropped connection is re-established and the request
/// re-sent up to `retries` times; every operation is safe to repeat
/// (deposits and results are idempotent by signature, a lost pickup lease
/// simply expires).
class StoreClient final : public DemandStoreApi {
 public:
  explicit StoreClient(Endpoint ep, int retries = 5, std::chrono::milliseconds backoff = 100ms)
      : ep_(std::move(ep)), retries_(retries), backoff_(backoff), socket_(io_) {}

  Message request(const Message& req) {
    const std::string frame = encode_frame(req);
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      try {
        ensure_connected();
        boost::asio::write(socket_, boost::asio::buffer(frame));
        std::array<std::uint8_t, 4> header{};
        boost::asio::read(socket_, boost::asio::buffer(header));
        std::string body(decode_length(std::span<const std::uint8_t, 4>(header)), '\0');
        boost::asio::read(socket_, boost::asio::buffer(body));
        Message reply = decode_body(body);
        if (reply.type != "ACK") throw ProtocolError("expected ACK, got " + reply.type);
        if (!reply.payload.value("ok", false)) throw ProtocolError(reply.payload.value("error", std::string("rejected")));
        return reply;
      } catch (const boost::system::system_error& e) {
        last_error = e.what();
        boost::system::error_code ignored;
        socket_.close(ignored);
        std::this_thread::sleep_for(backoff_ * (attempt + 1));
      }
    }
    throw TransportError("demand store " + ep_.host + ":" + std::to_string(ep_.port) + " unreachable: " + last_error);
  }

  DepositReply deposit(const std::string& signature, const FileItem& item) override {
    const auto r = request(Message{"DEPOSIT", signature, to_json(item)});
    const auto state = r.payload.at("state").get<std::string>();
    DepositReply out;
    out.created = r.payload.at("created").get<bool>();
    out.state = state == "computed" ? DemandState::computed
                : state == "in_progress" ? DemandState::in_progress
                                         : DemandState::pending;
    return out;
  }

  std::optional<Demand> pickup(const std::string& worker_id) override {
    const auto r = request(Message{"PICKUP", "", json{{"worker", worker_id}}});
    if (r.payload.at("demand").is_null()) return std::nullopt;
    return Demand{r.signature, file_item_from_json(r.payload["demand"]), DemandState::in_progress, std::nullopt};
  }

  ResultOutcome deposit_result(const std::string& signature, const std::string& worker_id,
                               const ResultSet& result) override {
    const auto r = request(Message{"RESULT", signature, json{{"worker", worker_id}, {"result", to_json(result)}}});
    const auto o = r.payload.at("outcome").get<std::string>();
    return o == "stored" ? ResultOutcome::stored : o == "duplicate" ? ResultOutcome::duplicate
                                                                    : ResultOutcome::conflict_ignored;
  }

  Harvest harvest(const std::vector<std::string>& expected) override {
    const auto r = request(Message{"HARVEST", "", json{{"signatures", expected}}});
    Harvest out;
    for (const auto& x : r.payload.at("results")) {
      out.emplace_back(x.at("signature").get<std::string>(), result_from_json(x.at("result")));
    }
    return out;
  }

 private:
  void ensure_connected() {
    if (socket_.is_open()) return;
    boost::asio::ip::tcp::resolver resolver(io_);
    boost::asio::connect(socket_, resolver.resolve(ep_.host, std::to_string(ep_.port)));
  }

  Endpoint ep_;
  int retries_;
  std::chrono::milliseconds backoff_;
  boost::asio::io_context io_;
  boost::asio::ip::tcp::socket socket_;
};

// --- roles -----------------------------------------------------------------------

struct WorkerOptions {
  std::chrono::milliseconds poll = 10ms;
  // Exit after this long without finding work (only once `stop` is set, when
  // a stop flag is given).
  std::chrono::milliseconds idle_exit = 1000ms;
  const std::atomic<bool>* stop = nullptr;
  // Fault injection: after this many completed demands, lease one more and
  // abandon it, as a crashed worker would.
  std::optional<std::size_t> crash_after;
};

struct WorkerReport {
  std::size_t completed = 0;
  bool crashed = false;
};

/// Worker loop: classification only, with a model, configuration and test
/// data that are all local to the worker.
inline WorkerReport run_worker(DemandStoreApi& store, const std::string& worker_id, const Model& model,
                               const std::filesystem::path& root, const PipelineConfig& cfg,
                               const WorkerOptions& opts = {}) {
  check_model(model, cfg);
  WorkerReport report;
  auto idle_since = std::chrono::steady_clock::now();
  for (;;) {
    auto demand = store.pickup(worker_id);
    if (!demand) {
      const bool may_exit = opts.stop == nullptr || opts.stop->load();
      if (may_exit && std::chrono::steady_clock::now() - idle_since >= opts.idle_exit) return report;
      std::this_thread::sleep_for(opts.poll);
      continue;
    }
    if (opts.crash_after && report.completed >= *opts.crash_after) {
      report.crashed = true;
      return report;
    }
    const auto result = classify_file(root / demand->item.path, model, cfg);
    store.deposit_result(demand->signature, worker_id, result);
    ++report.completed;
    idle_since = std::chrono::steady_clock::now();
  }
}

struct GeneratorOptions {
  std::chrono::milliseconds poll = 10ms;
  std::chrono::milliseconds timeout = 600s;
};

/// Deposits one demand per index entry, then harvests until every result is
/// in. Returns results in index order, ready for make_warnings().
inline std::vector<FileResult> run_generator(DemandStoreApi& store, const TestCaseIndex& index,
                                             const std::filesystem::path& root, const PipelineConfig& cfg,
                                             const GeneratorOptions& opts = {}) {
  std::vector<std::string> sigs;
  sigs.reserve(index.entries.size());
  const auto options = cfg.option_string();
  for (const auto& e : index.entries) {
    const auto content = detail::read_file(root / e.path);
    sigs.push_back(demand_signature(index.case_name, e.path, options, content));
    store.deposit(sigs.back(), FileItem{e.path, e.content});
  }

  const auto deadline = std::chrono::steady_clock::now() + opts.timeout;
  Harvest got = store.harvest(sigs);
  while (got.size() < sigs.size()) {
    if (std::chrono::steady_clock::now() > deadline) {
      throw TransportError("timed out with " + std::to_string(sigs.size() - got.size()) + " demands outstanding");
    }
    std::this_thread::sleep_for(opts.poll);
    got = store.harvest(sigs);
  }

  std::vector<FileResult> out;
  out.reserve(sigs.size());
  for (std::size_t i = 0; i < sigs.size(); ++i) {
    if (got[i].first != sigs[i]) throw ProtocolError("harvest returned results out of order");
    out.push_back(FileResult{index.entries[i].path, std::move(got[i].second)});
  }
  return out;
}

}  // namespace codewave::dnet
