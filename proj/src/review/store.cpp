#include "skg/review/store.hpp"

#include <chrono>
#include <mutex>

#include "skg/error.hpp"
#include "skg/util/digest.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace skg::review {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(RecordKind k) noexcept {
  switch (k) {
    case RecordKind::Case: return "case";
    case RecordKind::Graph: return "graph";
    case RecordKind::Trace: return "trace";
    case RecordKind::Bench: return "bench";
    case RecordKind::Report: return "report";
    case RecordKind::Task: return "task";
  }
  return "case";
}

std::optional<RecordKind> parse_record_kind(std::string_view s) noexcept {
  for (auto k : {RecordKind::Case, RecordKind::Graph, RecordKind::Trace, RecordKind::Bench, RecordKind::Report,
                 RecordKind::Task}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

json index_entry_to_json(const IndexEntry& e) {
  return {{"seq", e.seq},
          {"key", e.key},
          {"kind", to_string(e.kind)},
          {"written_at", e.written_at.to_string()},
          {"subjects", e.subjects},
          {"meta", e.meta}};
}

IndexEntry index_entry_from_json(const json& j, const std::string& path) {
  util::ObjectReader r(j, path);
  IndexEntry e;
  const auto seq = r.integer("seq");
  if (seq < 0) util::schema_error(r.child("seq"), "negative sequence number");
  e.seq = static_cast<std::uint64_t>(seq);
  e.key = r.nonempty("key");
  const auto kind = r.string("kind");
  const auto k = parse_record_kind(kind);
  if (!k) util::schema_error(r.child("kind"), "unknown record kind " + kind);
  e.kind = *k;
  const auto at = Timestamp::parse(r.string("written_at"));
  if (!at) util::schema_error(r.child("written_at"), "bad timestamp");
  e.written_at = *at;
  for (const auto& s : r.array("subjects")) {
    if (!s.is_string()) util::schema_error(r.child("subjects"), "expected strings");
    e.subjects.push_back(s.get<std::string>());
  }
  e.meta = r.object("meta");
  r.finish();
  return e;
}

Timestamp system_now() {
  return Timestamp{std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count()};
}

namespace {

void write_atomically(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  util::write_file(tmp.string(), bytes);
  fs::rename(tmp, path);
}

}  // namespace

Store::Store(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
  std::error_code ec;
  fs::create_directories(root_ / "objects", ec);
  fs::create_directories(root_ / "assets", ec);
  if (ec) throw Error(Errc::Io, "cannot create store at " + root_.string() + ": " + ec.message());

  const auto log_path = root_ / "index.log";
  if (fs::exists(log_path)) {
    const auto text = util::read_file(log_path.string());
    std::size_t start = 0, line = 0;
    while (start < text.size()) {
      const auto nl = text.find('\n', start);
      // A line without its newline is a torn append; it was never committed.
      if (nl == std::string::npos) break;
      ++line;
      const auto doc = util::parse_json(std::string_view(text).substr(start, nl - start));
      auto e = index_entry_from_json(doc, "index.log:" + std::to_string(line));
      by_key_[e.key] = entries_.size();
      entries_.push_back(std::move(e));
      start = nl + 1;
    }
    if (start < text.size()) fs::resize_file(log_path, start);
  }
  log_.open(log_path, std::ios::binary | std::ios::app);
  if (!log_) throw Error(Errc::Io, "cannot open " + log_path.string());
}

fs::path Store::object_path(const std::string& key) const {
  return root_ / "objects" / key.substr(0, 2) / key;
}

std::string Store::put(RecordKind kind, std::string_view payload, std::vector<std::string> subjects, json meta) {
  const auto key = util::sha256_hex(payload);
  std::lock_guard writer(write_mutex_);
  {
    std::shared_lock read(index_mutex_);
    if (by_key_.contains(key)) return key;
  }
  write_atomically(object_path(key), payload);

  IndexEntry e;
  e.seq = entries_.size() + 1;
  e.key = key;
  e.kind = kind;
  e.written_at = clock_();
  e.subjects = std::move(subjects);
  e.meta = std::move(meta);
  log_ << util::dump_canonical(index_entry_to_json(e)) << '\n';
  log_.flush();
  if (!log_) throw Error(Errc::Io, "index append failed");

  std::unique_lock write(index_mutex_);
  by_key_[key] = entries_.size();
  entries_.push_back(std::move(e));
  return key;
}

StoreRecord Store::get(const std::string& key) const {
  StoreRecord rec;
  {
    std::shared_lock read(index_mutex_);
    const auto it = by_key_.find(key);
    if (it == by_key_.end()) throw Error(Errc::NotFound, "no record " + key, {{"key", key}});
    rec.entry = entries_[it->second];
  }
  try {
    rec.payload = util::read_file(object_path(key).string());
  } catch (const Error&) {
    throw Error(Errc::DigestMismatch, "record " + key + " is missing from the object store", {{"key", key}});
  }
  if (util::sha256_hex(rec.payload) != key) {
    throw Error(Errc::DigestMismatch, "record " + key + " fails its digest check", {{"key", key}});
  }
  return rec;
}

bool Store::contains(const std::string& key) const {
  std::shared_lock read(index_mutex_);
  return by_key_.contains(key);
}

std::vector<IndexEntry> Store::entries() const {
  std::shared_lock read(index_mutex_);
  return entries_;
}

std::size_t Store::size() const {
  std::shared_lock read(index_mutex_);
  return entries_.size();
}

std::string Store::put_asset(std::string_view bytes) {
  const auto hash = util::sha256_hex(bytes);
  const auto path = root_ / "assets" / hash;
  std::lock_guard writer(write_mutex_);
  if (!fs::exists(path)) write_atomically(path, bytes);
  return hash;
}

std::optional<std::string> Store::get_asset(const std::string& hash) const {
  if (hash.size() != 64 || hash.find_first_not_of("0123456789abcdef") != std::string::npos) return std::nullopt;
  const auto path = root_ / "assets" / hash;
  if (!fs::exists(path)) return std::nullopt;
  auto bytes = util::read_file(path.string());
  if (util::sha256_hex(bytes) != hash) {
    throw Error(Errc::DigestMismatch, "asset " + hash + " fails its digest check", {{"hash", hash}});
  }
  return bytes;
}

}  // namespace skg::review
