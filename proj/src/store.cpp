#include "kct/store.hpp"

#include <sqlite3.h>

#include <cstdio>

#include "kct/error.hpp"
#include "kct/hash.hpp"

namespace kct {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS missions (
  hash        TEXT PRIMARY KEY,
  mission_id  TEXT NOT NULL,
  document    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS snapshots (
  version       INTEGER PRIMARY KEY,
  mission_hash  TEXT NOT NULL REFERENCES missions(hash),
  inputs        TEXT NOT NULL,
  board         TEXT NOT NULL,
  config_hash   TEXT NOT NULL,
  created_at    INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS assets (
  version   INTEGER NOT NULL REFERENCES snapshots(version),
  asset_id  TEXT NOT NULL,
  record    TEXT NOT NULL,
  PRIMARY KEY (version, asset_id)
);
CREATE TABLE IF NOT EXISTS inventory_meta (
  version  INTEGER PRIMARY KEY REFERENCES snapshots(version),
  pending  TEXT NOT NULL,
  applied  INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS pointers (
  name   TEXT PRIMARY KEY,
  value  TEXT NOT NULL
);
)sql";

// Prepared statement with positional binding; finalised on scope exit.
class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &s_, nullptr) != SQLITE_OK)
      throw IoError(std::string("store: ") + sqlite3_errmsg(db));
  }
  ~Stmt() { sqlite3_finalize(s_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    check(sqlite3_bind_text(s_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(s_, i, v));
    return *this;
  }
  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(s_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw IoError(std::string("store: ") + sqlite3_errmsg(db_));
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(s_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(s_, col)))
             : std::string{};
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(s_, col); }

 private:
  void check(int rc) const {
    if (rc != SQLITE_OK) throw IoError(std::string("store: ") + sqlite3_errmsg(db_));
  }
  sqlite3* db_;
  sqlite3_stmt* s_ = nullptr;
};

nlohmann::json parse_column(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("store: corrupt row: ") + e.what());
  }
}

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

Store::Store(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw IoError("cannot open store " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  exec(kSchema);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw IoError("store: " + msg);
  }
}

std::uint64_t Store::append(const SnapshotInput& s, const std::function<void(std::uint64_t)>& before_commit) {
  std::lock_guard lock(mu_);
  exec("BEGIN IMMEDIATE");
  try {
    std::uint64_t version = 1;
    {
      Stmt q(db_, "SELECT COALESCE(MAX(version), 0) FROM snapshots");
      if (q.step()) version = static_cast<std::uint64_t>(q.integer(0)) + 1;
    }
    Stmt(db_, "INSERT OR IGNORE INTO missions(hash, mission_id, document) VALUES (?, ?, ?)")
        .bind(1, s.mission_hash)
        .bind(2, s.mission.value("mission_id", std::string{}))
        .bind(3, s.mission.dump())
        .step();
    Stmt(db_, "INSERT INTO snapshots(version, mission_hash, inputs, board, config_hash, created_at) "
              "VALUES (?, ?, ?, ?, ?, ?)")
        .bind(1, as_int(version))
        .bind(2, s.mission_hash)
        .bind(3, s.inputs.dump())
        .bind(4, s.board)
        .bind(5, s.config_hash)
        .bind(6, s.created_at)
        .step();
    const auto& inv = s.inventory;
    if (inv.is_object()) {
      for (const auto& a : inv.value("assets", nlohmann::json::array()))
        Stmt(db_, "INSERT INTO assets(version, asset_id, record) VALUES (?, ?, ?)")
            .bind(1, as_int(version))
            .bind(2, a.at("asset_id").get<std::string>())
            .bind(3, a.dump())
            .step();
      Stmt(db_, "INSERT INTO inventory_meta(version, pending, applied) VALUES (?, ?, ?)")
          .bind(1, as_int(version))
          .bind(2, inv.value("pending_notifications", nlohmann::json::array()).dump())
          .bind(3, inv.value("events_applied", std::int64_t{0}))
          .step();
    }
    Stmt(db_, "INSERT INTO pointers(name, value) VALUES ('latest', ?) "
              "ON CONFLICT(name) DO UPDATE SET value = excluded.value")
        .bind(1, std::to_string(version))
        .step();
    if (before_commit) before_commit(version);
    exec("COMMIT");
    return version;
  } catch (...) {
    exec("ROLLBACK");
    throw;
  }
}

Snapshot Store::get(std::uint64_t version) const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT s.mission_hash, m.document, s.inputs, s.board, s.config_hash, s.created_at "
         "FROM snapshots s JOIN missions m ON m.hash = s.mission_hash WHERE s.version = ?");
  q.bind(1, as_int(version));
  if (!q.step()) throw NotFoundError("scoreboard version " + std::to_string(version) + " not found");
  Snapshot s;
  s.version = version;
  s.mission_hash = q.text(0);
  s.mission = parse_column(q.text(1));
  s.inputs = parse_column(q.text(2));
  s.board = q.text(3);
  s.config_hash = q.text(4);
  s.created_at = q.integer(5);

  nlohmann::json assets = nlohmann::json::array();
  Stmt a(db_, "SELECT record FROM assets WHERE version = ? ORDER BY asset_id");
  a.bind(1, as_int(version));
  while (a.step()) assets.push_back(parse_column(a.text(0)));
  Stmt m(db_, "SELECT pending, applied FROM inventory_meta WHERE version = ?");
  m.bind(1, as_int(version));
  if (m.step())
    s.inventory = {{"assets", assets}, {"pending_notifications", parse_column(m.text(0))}, {"events_applied", m.integer(1)}};
  return s;
}

std::uint64_t Store::latest_version() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT value FROM pointers WHERE name = 'latest'");
  return q.step() ? std::stoull(q.text(0)) : 0;
}

std::optional<Snapshot> Store::latest() const {
  const auto v = latest_version();
  if (v == 0) return std::nullopt;
  return get(v);
}

std::vector<std::uint64_t> Store::versions() const {
  std::lock_guard lock(mu_);
  std::vector<std::uint64_t> out;
  Stmt q(db_, "SELECT version FROM snapshots ORDER BY version");
  while (q.step()) out.push_back(static_cast<std::uint64_t>(q.integer(0)));
  return out;
}

void Store::put_mission(const StoredMission& mission) {
  std::lock_guard lock(mu_);
  exec("BEGIN IMMEDIATE");
  try {
    Stmt(db_, "INSERT OR IGNORE INTO missions(hash, mission_id, document) VALUES (?, ?, ?)")
        .bind(1, mission.hash)
        .bind(2, mission.mission_id)
        .bind(3, mission.document.dump())
        .step();
    Stmt(db_, "INSERT INTO pointers(name, value) VALUES ('active_mission', ?) "
              "ON CONFLICT(name) DO UPDATE SET value = excluded.value")
        .bind(1, mission.hash)
        .step();
    exec("COMMIT");
  } catch (...) {
    exec("ROLLBACK");
    throw;
  }
}

std::optional<StoredMission> Store::active_mission() const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT m.hash, m.mission_id, m.document FROM pointers p JOIN missions m ON m.hash = p.value "
         "WHERE p.name = 'active_mission'");
  if (!q.step()) return std::nullopt;
  return StoredMission{q.text(0), q.text(1), parse_column(q.text(2))};
}

std::vector<StoredMission> Store::missions() const {
  std::lock_guard lock(mu_);
  std::vector<StoredMission> out;
  Stmt q(db_, "SELECT hash, mission_id, document FROM missions ORDER BY hash");
  while (q.step()) out.push_back({q.text(0), q.text(1), parse_column(q.text(2))});
  return out;
}

std::string Store::content_hash() const {
  std::lock_guard lock(mu_);
  std::uint64_t h = fnv1a64("");
  auto feed = [&](const std::string& s) { h = fnv1a64(s + '\x1f', h); };
  const char* queries[] = {
      "SELECT hash || char(31) || mission_id || char(31) || document FROM missions ORDER BY hash",
      "SELECT version || char(31) || mission_hash || char(31) || inputs || char(31) || board || char(31) || "
      "config_hash || char(31) || created_at FROM snapshots ORDER BY version",
      "SELECT version || char(31) || asset_id || char(31) || record FROM assets ORDER BY version, asset_id",
      "SELECT version || char(31) || pending || char(31) || applied FROM inventory_meta ORDER BY version",
      "SELECT name || char(31) || value FROM pointers ORDER BY name",
  };
  for (const char* sql : queries) {
    Stmt q(db_, sql);
    while (q.step()) feed(q.text(0));
    feed("\x1e");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kct
