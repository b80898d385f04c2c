#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/core/value.hpp"

namespace skg::review {

enum class RecordKind { Case, Graph, Trace, Bench, Report, Task };
std::string_view to_string(RecordKind k) noexcept;
std::optional<RecordKind> parse_record_kind(std::string_view s) noexcept;

/// One line of the index log.
struct IndexEntry {
  std::uint64_t seq = 0;
  std::string key;  // SHA-256 hex of the payload
  RecordKind kind = RecordKind::Case;
  Timestamp written_at;
  /// Ids (graph, case, task) this record refers to.
  std::vector<std::string> subjects;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json index_entry_to_json(const IndexEntry& e);
IndexEntry index_entry_from_json(const nlohmann::json& j, const std::string& path = "");

struct StoreRecord {
  IndexEntry entry;
  std::string payload;
};

using Clock = std::function<Timestamp()>;
/// Wall-clock UTC seconds.
Timestamp system_now();

/// Content-addressed, append-only record store. Payloads live in
/// objects/<key[0:2]>/<key>; index.log lists every record once, in write
/// order. Writes are serialized; reads of payloads take no writer lock.
class Store {
 public:
  explicit Store(std::filesystem::path root, Clock clock = system_now);

  /// Idempotent: a payload already present returns its key and writes nothing.
  std::string put(RecordKind kind, std::string_view payload, std::vector<std::string> subjects = {},
                  nlohmann::json meta = nlohmann::json::object());
  /// Throws NotFound, or DigestMismatch when the stored bytes no longer hash to
  /// the key.
  StoreRecord get(const std::string& key) const;
  bool contains(const std::string& key) const;

  /// Snapshot of the index in write order.
  std::vector<IndexEntry> entries() const;
  std::size_t size() const;

  /// Raw evidence bytes addressed by their SHA-256.
  std::string put_asset(std::string_view bytes);
  std::optional<std::string> get_asset(const std::string& hash) const;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path object_path(const std::string& key) const;

 private:
  std::filesystem::path root_;
  Clock clock_;
  mutable std::shared_mutex index_mutex_;
  std::mutex write_mutex_;
  std::vector<IndexEntry> entries_;
  std::map<std::string, std::size_t> by_key_;
  std::ofstream log_;
};

}  // namespace skg::review
