#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

struct sqlite3;

namespace kct {

struct SnapshotInput {
  std::string mission_hash;
  nlohmann::json mission;    // kct-mission/1 document
  nlohmann::json inputs;     // metric inputs that produced the board
  std::string board;         // serialised kct-scoreboard/1 document
  std::string config_hash;
  nlohmann::json inventory;  // asset inventory after the cycle
  std::int64_t created_at = 0;
};

struct Snapshot : SnapshotInput {
  std::uint64_t version = 0;
};

struct StoredMission {
  std::string hash;
  std::string mission_id;
  nlohmann::json document;
};

/// Append-only versioned repository on SQLite. Versions start at 1 and
/// increase by one per successful append; the latest pointer moves in the
/// same transaction as the snapshot rows. All members are thread-safe.
class Store {
 public:
  /// ":memory:" opens a private in-memory database.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Appends one snapshot. `before_commit` runs inside the transaction with
  /// the version being written; if it (or any write) throws, nothing is
  /// persisted and the error propagates.
  std::uint64_t append(const SnapshotInput& snapshot,
                       const std::function<void(std::uint64_t)>& before_commit = {});

  /// Throws NotFoundError for an unknown version.
  Snapshot get(std::uint64_t version) const;
  std::optional<Snapshot> latest() const;
  /// 0 when the store is empty.
  std::uint64_t latest_version() const;
  std::vector<std::uint64_t> versions() const;

  /// Records a mission document and makes it the active mission.
  void put_mission(const StoredMission& mission);
  std::optional<StoredMission> active_mission() const;
  std::vector<StoredMission> missions() const;

  /// Digest over every persisted row; equal iff the contents are equal.
  std::string content_hash() const;

 private:
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

}  // namespace kct
