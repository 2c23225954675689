#include "basinfo/store.hpp"

#include <bit>
#include <cstring>
#include <map>

#include <sqlite3.h>

#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"
#include "basinfo/ingest.hpp"
#include "basinfo/json_io.hpp"

namespace basinfo {
namespace {

static_assert(std::endian::native == std::endian::little, "value blobs are stored little-endian");

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS settings(key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS study_areas(id TEXT PRIMARY KEY, name TEXT NOT NULL,
  root_catchment TEXT, owner TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS users(id TEXT PRIMARY KEY, username TEXT NOT NULL UNIQUE,
  verifier TEXT NOT NULL, groups_json TEXT NOT NULL, is_admin INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS grants(id TEXT PRIMARY KEY, subject_kind TEXT NOT NULL,
  subject_id TEXT NOT NULL, object_id TEXT NOT NULL, actions INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS datasets(id TEXT PRIMARY KEY, kind TEXT NOT NULL,
  study_area TEXT NOT NULL, owner TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS metadata(identifier TEXT PRIMARY KEY, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS stations(id TEXT PRIMARY KEY, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS series(id TEXT PRIMARY KEY, station_id TEXT NOT NULL,
  variable TEXT NOT NULL, head_version INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS series_versions(series_id TEXT NOT NULL, version INTEGER NOT NULL,
  parent_version INTEGER, start_date TEXT NOT NULL, end_date TEXT NOT NULL,
  vals BLOB NOT NULL, slots BLOB NOT NULL, correction TEXT, gaps TEXT NOT NULL,
  digest TEXT NOT NULL, committed_at TEXT NOT NULL, PRIMARY KEY(series_id, version));
CREATE TABLE IF NOT EXISTS catchments(id TEXT PRIMARY KEY, json TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS assets(id TEXT PRIMARY KEY, json TEXT NOT NULL, bytes BLOB NOT NULL);
)sql";

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::Internal, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
  Stmt& bind_null(int i) {
    sqlite3_bind_null(stmt_, i);
    return *this;
  }
  Stmt& bind_blob(int i, std::string_view bytes) {
    sqlite3_bind_blob64(stmt_, i, bytes.data(), bytes.size(), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind_opt(int i, const std::optional<std::string>& v) { return v ? bind(i, *v) : bind_null(i); }

  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) {
      throw Error(ErrorCode::Conflict, std::string("constraint violation: ") + sqlite3_errmsg(db_));
    }
    throw Error(ErrorCode::Internal, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    auto p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::optional<std::string> opt_text(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return text(col);
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string blob(int col) const {
    auto p = static_cast<const char*>(sqlite3_column_blob(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

constexpr std::uint8_t kPresentBit = 0x80;

std::string encode_values(const DailySeries& s) {
  std::string out(s.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double v = s.values[i].value_or(0.0);
    std::memcpy(out.data() + i * sizeof(double), &v, sizeof v);
  }
  return out;
}

std::string encode_slots(const DailySeries& s) {
  std::string out(s.size(), '\0');
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = static_cast<char>(static_cast<std::uint8_t>(s.flags[i]) | (s.values[i] ? kPresentBit : 0));
  }
  return out;
}

void decode_into(DailySeries& s, const std::string& vals, const std::string& slots) {
  if (vals.size() != slots.size() * sizeof(double)) {
    throw Error(ErrorCode::Internal, "corrupt series blob for " + s.id);
  }
  s.values.resize(slots.size());
  s.flags.resize(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto b = static_cast<std::uint8_t>(slots[i]);
    s.flags[i] = static_cast<Flag>(b & 0x03);
    if (b & kPresentBit) {
      double v;
      std::memcpy(&v, vals.data() + i * sizeof(double), sizeof v);
      s.values[i] = v;
    } else {
      s.values[i].reset();
    }
  }
}

std::string digest_of(const DailySeries& s, const std::string& vals, const std::string& slots) {
  std::string canon;
  for (const std::string& part :
       {s.id, s.station_id, std::string(s.variable.name()), s.start.iso(), s.end.iso(),
        std::to_string(s.version), s.parent_version ? std::to_string(*s.parent_version) : std::string("-"),
        s.correction ? canonical_json(*s.correction) : std::string("-")}) {
    canon += part;
    canon += '\0';
  }
  canon += vals;
  canon += slots;
  return sha256_hex(canon);
}

template <class T>
T parse_json_as(const std::string& text) {
  return nlohmann::json::parse(text).get<T>();
}

Catchment catchment_from_json(const nlohmann::json& j) {
  Catchment c;
  c.id = j.at("id").get<std::string>();
  c.name = j.at("name").get<std::string>();
  if (!j.at("parentId").is_null()) c.parent_id = j["parentId"].get<std::string>();
  c.geometry = polygon_from_json(j.at("geometry"));
  c.area_km2 = j.at("areaKm2").get<double>();
  return c;
}

nlohmann::json catchment_to_json(const Catchment& c) {
  return {{"id", c.id},
          {"name", c.name},
          {"parentId", c.parent_id ? nlohmann::json(*c.parent_id) : nlohmann::json()},
          {"geometry", polygon_to_json(c.geometry)},
          {"areaKm2", c.area_km2}};
}

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "series") return DatasetKind::Series;
  if (s == "station") return DatasetKind::Station;
  if (s == "catchment") return DatasetKind::Catchment;
  return DatasetKind::Asset;
}

}  // namespace

std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Series: return "series";
    case DatasetKind::Station: return "station";
    case DatasetKind::Catchment: return "catchment";
    case DatasetKind::Asset: return "asset";
  }
  return "";
}

std::string series_digest(const DailySeries& s) { return digest_of(s, encode_values(s), encode_slots(s)); }

class Store::Tx {
 public:
  explicit Tx(Store& s) : store_(s), lock_(s.mu_) {
    if (store_.tx_depth_++ == 0) store_.exec("BEGIN IMMEDIATE");
  }
  ~Tx() {
    if (--store_.tx_depth_ == 0 && !committed_) {
      sqlite3_exec(store_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
  }
  void commit() {
    if (store_.tx_depth_ == 1) {
      store_.exec("COMMIT");
      committed_ = true;
    }
  }

 private:
  Store& store_;
  std::unique_lock<std::recursive_mutex> lock_;
  bool committed_ = false;
};

Store::Store(const std::filesystem::path& db_file) {
  if (sqlite3_open_v2(db_file.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::Internal, "cannot open store " + db_file.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 10000);
  exec("PRAGMA journal_mode=WAL");
  exec("PRAGMA synchronous=FULL");
  exec("PRAGMA foreign_keys=ON");
  exec(kSchema);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::Internal, "sqlite: " + msg);
  }
}

void Store::transaction(const std::function<void()>& fn) {
  Tx tx(*this);
  fn();
  tx.commit();
}

std::optional<std::string> Store::setting(const std::string& key) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT value FROM settings WHERE key = ?");
  q.bind(1, key);
  if (!q.step()) return std::nullopt;
  return q.text(0);
}

void Store::set_setting(const std::string& key, const std::string& value) {
  Tx tx(*this);
  Stmt(db_, "INSERT INTO settings(key, value) VALUES(?, ?) ON CONFLICT(key) DO UPDATE SET value = excluded.value")
      .bind(1, key)
      .bind(2, value)
      .run();
  tx.commit();
}

void Store::put_study_area(const StudyArea& a) {
  Tx tx(*this);
  Stmt(db_, "INSERT INTO study_areas(id, name, root_catchment, owner) VALUES(?, ?, ?, ?) "
            "ON CONFLICT(id) DO UPDATE SET name = excluded.name, root_catchment = excluded.root_catchment")
      .bind(1, a.id)
      .bind(2, a.name)
      .bind_opt(3, a.root_catchment_id)
      .bind(4, a.owner)
      .run();
  tx.commit();
}

std::optional<StudyArea> Store::study_area(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, name, root_catchment, owner FROM study_areas WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return StudyArea{q.text(0), q.text(1), q.opt_text(2), q.text(3)};
}

std::vector<StudyArea> Store::study_areas() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, name, root_catchment, owner FROM study_areas ORDER BY id");
  std::vector<StudyArea> out;
  while (q.step()) out.push_back({q.text(0), q.text(1), q.opt_text(2), q.text(3)});
  return out;
}

void Store::add_user(const User& u) {
  Tx tx(*this);
  if (user_by_name(u.username)) {
    throw Error(ErrorCode::Conflict, "username '" + u.username + "' already exists", u.username);
  }
  Stmt(db_, "INSERT INTO users(id, username, verifier, groups_json, is_admin) VALUES(?, ?, ?, ?, ?)")
      .bind(1, u.id)
      .bind(2, u.username)
      .bind(3, u.verifier)
      .bind(4, nlohmann::json(u.groups).dump())
      .bind(5, u.is_admin ? 1 : 0)
      .run();
  tx.commit();
}

namespace {
User read_user(const Stmt& q) {
  return User{q.text(0), q.text(1), q.text(2), parse_json_as<std::vector<std::string>>(q.text(3)),
              q.integer(4) != 0};
}
}  // namespace

std::optional<User> Store::user(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, username, verifier, groups_json, is_admin FROM users WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return read_user(q);
}

std::optional<User> Store::user_by_name(const std::string& username) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, username, verifier, groups_json, is_admin FROM users WHERE username = ?");
  q.bind(1, username);
  if (!q.step()) return std::nullopt;
  return read_user(q);
}

std::vector<User> Store::users() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, username, verifier, groups_json, is_admin FROM users ORDER BY id");
  std::vector<User> out;
  while (q.step()) out.push_back(read_user(q));
  return out;
}

void Store::add_grant(const PermissionGrant& g) {
  if (g.actions.empty()) throw Error(ErrorCode::InvalidArgument, "grant has no actions");
  Tx tx(*this);
  Stmt(db_, "INSERT INTO grants(id, subject_kind, subject_id, object_id, actions) VALUES(?, ?, ?, ?, ?)")
      .bind(1, g.id)
      .bind(2, std::string(g.subject_kind == SubjectKind::User ? "user" : "group"))
      .bind(3, g.subject_id)
      .bind(4, g.object_id)
      .bind(5, static_cast<int>(g.actions.bits()))
      .run();
  tx.commit();
}

std::vector<PermissionGrant> Store::grants() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT id, subject_kind, subject_id, object_id, actions FROM grants ORDER BY id");
  std::vector<PermissionGrant> out;
  while (q.step()) {
    out.push_back({q.text(0), q.text(1) == "user" ? SubjectKind::User : SubjectKind::Group, q.text(2), q.text(3),
                   ActionSet::from_bits(static_cast<std::uint8_t>(q.integer(4)))});
  }
  return out;
}

std::optional<DatasetRef> Store::dataset(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT kind, study_area, owner FROM datasets WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return DatasetRef{parse_dataset_kind(q.text(0)), ObjectRef{id, q.text(2), q.text(1)}};
}

void Store::insert_dataset(const std::string& id, DatasetKind kind, const std::string& study_area,
                           const std::string& owner, const MetadataRecord& record) {
  if (record.identifier != id) {
    throw Error(ErrorCode::InvalidArgument, "metadata identifier must equal the dataset id");
  }
  if (!this->study_area(study_area)) {
    throw Error(ErrorCode::InvalidArgument, "unknown study area '" + study_area + "'", study_area);
  }
  if (dataset(id)) throw Error(ErrorCode::Conflict, "dataset id '" + id + "' already exists", id);
  Stmt(db_, "INSERT INTO datasets(id, kind, study_area, owner) VALUES(?, ?, ?, ?)")
      .bind(1, id)
      .bind(2, std::string(to_string(kind)))
      .bind(3, study_area)
      .bind(4, owner)
      .run();
  Stmt(db_, "INSERT INTO metadata(identifier, json) VALUES(?, ?)").bind(1, id).bind(2, nlohmann::json(record).dump()).run();
}

void Store::create_station(const Station& s, const std::string& study_area, const std::string& owner,
                           const MetadataRecord& record) {
  validate_station(s);
  Tx tx(*this);
  insert_dataset(s.id, DatasetKind::Station, study_area, owner, record);
  Stmt(db_, "INSERT INTO stations(id, json) VALUES(?, ?)").bind(1, s.id).bind(2, nlohmann::json(s).dump()).run();
  tx.commit();
}

std::optional<Station> Store::station(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM stations WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return parse_json_as<Station>(q.text(0));
}

std::vector<Station> Store::stations() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM stations ORDER BY id");
  std::vector<Station> out;
  while (q.step()) out.push_back(parse_json_as<Station>(q.text(0)));
  return out;
}

void Store::set_station_catchment(const std::string& station_id, const std::optional<std::string>& catchment_id) {
  Tx tx(*this);
  auto s = station(station_id);
  if (!s) throw Error(ErrorCode::UnknownStation, "unknown station " + station_id, station_id);
  s->catchment_id = catchment_id;
  Stmt(db_, "UPDATE stations SET json = ? WHERE id = ?").bind(1, nlohmann::json(*s).dump()).bind(2, station_id).run();
  tx.commit();
}

void Store::insert_version(const DailySeries& s, const std::string& committed_at) {
  if (auto v = validate_series(s); !v.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "series " + s.id + " violates " + std::string(to_string(v.front().kind)) + ": " + v.front().message);
  }
  const auto vals = encode_values(s);
  const auto slots = encode_slots(s);
  Stmt q(db_,
         "INSERT INTO series_versions(series_id, version, parent_version, start_date, end_date, vals, slots, "
         "correction, gaps, digest, committed_at) VALUES(?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
  q.bind(1, s.id).bind(2, s.version);
  if (s.parent_version) q.bind(3, *s.parent_version);
  else q.bind_null(3);
  q.bind(4, s.start.iso()).bind(5, s.end.iso()).bind_blob(6, vals).bind_blob(7, slots);
  if (s.correction) q.bind(8, canonical_json(*s.correction));
  else q.bind_null(8);
  q.bind(9, nlohmann::json(detect_gaps(s)).dump()).bind(10, digest_of(s, vals, slots)).bind(11, committed_at);
  q.run();
}

void Store::create_series(const DailySeries& v1, const std::string& study_area, const std::string& owner,
                          const MetadataRecord& record) {
  if (v1.version != 1) throw Error(ErrorCode::InvalidArgument, "new series must start at version 1");
  Tx tx(*this);
  if (!station(v1.station_id)) {
    throw Error(ErrorCode::UnknownStation, "unknown station " + v1.station_id, v1.station_id);
  }
  insert_dataset(v1.id, DatasetKind::Series, study_area, owner, record);
  Stmt(db_, "INSERT INTO series(id, station_id, variable, head_version) VALUES(?, ?, ?, 1)")
      .bind(1, v1.id)
      .bind(2, v1.station_id)
      .bind(3, std::string(v1.variable.name()))
      .run();
  insert_version(v1, record.modified);
  tx.commit();
}

void Store::commit_version(const DailySeries& next, int expected_head, const std::string& committed_at) {
  Tx tx(*this);
  auto info = series_info(next.id);
  if (!info) throw Error(ErrorCode::UnknownSeries, "unknown series " + next.id, next.id);
  if (info->head_version != expected_head || next.version != expected_head + 1 ||
      next.parent_version != std::optional<int>(expected_head)) {
    throw Error(ErrorCode::StaleWrite,
                "series " + next.id + " head is version " + std::to_string(info->head_version) +
                    ", write expected " + std::to_string(expected_head),
                std::to_string(info->head_version));
  }
  insert_version(next, committed_at);
  Stmt(db_, "UPDATE series SET head_version = ? WHERE id = ?").bind(1, next.version).bind(2, next.id).run();
  if (auto rec = metadata(next.id)) {
    if (committed_at > rec->modified) rec->modified = committed_at;
    Stmt(db_, "UPDATE metadata SET json = ? WHERE identifier = ?")
        .bind(1, nlohmann::json(*rec).dump())
        .bind(2, next.id)
        .run();
  }
  tx.commit();
}

std::optional<SeriesInfo> Store::series_info(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT s.id, s.station_id, s.variable, d.study_area, d.owner, s.head_version FROM series s "
         "JOIN datasets d ON d.id = s.id WHERE s.id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return SeriesInfo{q.text(0), q.text(1), Variable::parse(q.text(2)), q.text(3), q.text(4),
                    static_cast<int>(q.integer(5))};
}

std::vector<SeriesInfo> Store::series_list() const {
  std::lock_guard lock(mu_);
  Stmt q(db_,
         "SELECT s.id, s.station_id, s.variable, d.study_area, d.owner, s.head_version FROM series s "
         "JOIN datasets d ON d.id = s.id ORDER BY s.id");
  std::vector<SeriesInfo> out;
  while (q.step()) {
    out.push_back({q.text(0), q.text(1), Variable::parse(q.text(2)), q.text(3), q.text(4),
                   static_cast<int>(q.integer(5))});
  }
  return out;
}

std::size_t Store::series_count() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT COUNT(*) FROM series");
  q.step();
  return static_cast<std::size_t>(q.integer(0));
}

DailySeries Store::load_series(const std::string& id, std::optional<int> version) const {
  std::lock_guard lock(mu_);
  auto info = series_info(id);
  if (!info) throw Error(ErrorCode::UnknownSeries, "unknown series " + id, id);
  const int v = version.value_or(info->head_version);
  Stmt q(db_,
         "SELECT version, parent_version, start_date, end_date, vals, slots, correction FROM series_versions "
         "WHERE series_id = ? AND version = ?");
  q.bind(1, id).bind(2, v);
  if (!q.step()) {
    throw Error(ErrorCode::NotFound, "series " + id + " has no version " + std::to_string(v), std::to_string(v));
  }
  DailySeries s;
  s.id = id;
  s.station_id = info->station_id;
  s.variable = info->variable;
  s.version = static_cast<int>(q.integer(0));
  if (!q.is_null(1)) s.parent_version = static_cast<int>(q.integer(1));
  s.start = Date::parse_iso(q.text(2));
  s.end = Date::parse_iso(q.text(3));
  decode_into(s, q.blob(4), q.blob(5));
  if (auto c = q.opt_text(6)) s.correction = parse_json_as<CorrectionRecord>(*c);
  return s;
}

std::vector<DailySeries> Store::load_versions(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto info = series_info(id);
  if (!info) throw Error(ErrorCode::UnknownSeries, "unknown series " + id, id);
  std::vector<DailySeries> out;
  for (int v = 1; v <= info->head_version; ++v) out.push_back(load_series(id, v));
  return out;
}

GapReport Store::gap_report(const std::string& id, int version) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT gaps FROM series_versions WHERE series_id = ? AND version = ?");
  q.bind(1, id).bind(2, version);
  if (!q.step()) throw Error(ErrorCode::NotFound, "no gap report for " + id, id);
  const auto j = nlohmann::json::parse(q.text(0));
  GapReport g;
  g.series_id = j.at("seriesId").get<std::string>();
  for (const auto& gap : j.at("gaps")) g.gaps.push_back({gap.at("from").get<Date>(), gap.at("to").get<Date>()});
  g.total_missing = j.at("totalMissing").get<std::int64_t>();
  g.fraction_available = j.at("fractionAvailable").get<double>();
  return g;
}

std::string Store::stored_digest(const std::string& id, int version) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT digest FROM series_versions WHERE series_id = ? AND version = ?");
  q.bind(1, id).bind(2, version);
  if (!q.step()) throw Error(ErrorCode::NotFound, "no version " + std::to_string(version) + " of " + id, id);
  return q.text(0);
}

void Store::create_catchment(const Catchment& c, const std::string& study_area, const std::string& owner,
                             const MetadataRecord& record) {
  c.geometry.validate();
  Tx tx(*this);
  if (c.parent_id && !catchment(*c.parent_id)) {
    throw Error(ErrorCode::UnknownCatchment, "unknown parent catchment " + *c.parent_id, *c.parent_id);
  }
  insert_dataset(c.id, DatasetKind::Catchment, study_area, owner, record);
  Stmt(db_, "INSERT INTO catchments(id, json) VALUES(?, ?)").bind(1, c.id).bind(2, catchment_to_json(c).dump()).run();
  tx.commit();
}

std::optional<Catchment> Store::catchment(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM catchments WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return catchment_from_json(nlohmann::json::parse(q.text(0)));
}

std::vector<Catchment> Store::catchments() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM catchments ORDER BY id");
  std::vector<Catchment> out;
  while (q.step()) out.push_back(catchment_from_json(nlohmann::json::parse(q.text(0))));
  return out;
}

void Store::create_asset(const Asset& a, std::string_view bytes, const std::string& study_area,
                         const std::string& owner, const MetadataRecord& record) {
  if (static_cast<std::int64_t>(bytes.size()) != a.byte_size || sha256_hex(bytes) != a.checksum) {
    throw Error(ErrorCode::InvalidArgument, "asset checksum or size does not match its bytes");
  }
  Tx tx(*this);
  insert_dataset(a.id, DatasetKind::Asset, study_area, owner, record);
  Stmt(db_, "INSERT INTO assets(id, json, bytes) VALUES(?, ?, ?)")
      .bind(1, a.id)
      .bind(2, nlohmann::json(a).dump())
      .bind_blob(3, bytes)
      .run();
  tx.commit();
}

std::optional<Asset> Store::asset(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM assets WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) return std::nullopt;
  return parse_json_as<Asset>(q.text(0));
}

std::string Store::asset_bytes(const std::string& id) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT bytes FROM assets WHERE id = ?");
  q.bind(1, id);
  if (!q.step()) throw Error(ErrorCode::UnknownAsset, "unknown asset " + id, id);
  return q.blob(0);
}

std::vector<MetadataRecord> Store::metadata() const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM metadata ORDER BY identifier");
  std::vector<MetadataRecord> out;
  while (q.step()) out.push_back(parse_json_as<MetadataRecord>(q.text(0)));
  return out;
}

std::optional<MetadataRecord> Store::metadata(const std::string& identifier) const {
  std::lock_guard lock(mu_);
  Stmt q(db_, "SELECT json FROM metadata WHERE identifier = ?");
  q.bind(1, identifier);
  if (!q.step()) return std::nullopt;
  return parse_json_as<MetadataRecord>(q.text(0));
}

std::vector<std::string> Store::validate() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> problems;
  {
    Stmt q(db_, "PRAGMA integrity_check");
    while (q.step()) {
      if (q.text(0) != "ok") problems.push_back("sqlite integrity: " + q.text(0));
    }
  }
  auto count_orphans = [&](const char* sql, const std::string& what) {
    Stmt q(db_, sql);
    while (q.step()) problems.push_back(what + ": " + q.text(0));
  };
  count_orphans("SELECT id FROM datasets WHERE id NOT IN (SELECT identifier FROM metadata)", "dataset without metadata");
  count_orphans("SELECT identifier FROM metadata WHERE identifier NOT IN (SELECT id FROM datasets)",
                "metadata without dataset");
  count_orphans("SELECT id FROM datasets WHERE kind = 'series' AND id NOT IN (SELECT id FROM series)",
                "series dataset without series row");
  count_orphans("SELECT id FROM datasets WHERE kind = 'station' AND id NOT IN (SELECT id FROM stations)",
                "station dataset without station row");
  count_orphans("SELECT id FROM datasets WHERE kind = 'catchment' AND id NOT IN (SELECT id FROM catchments)",
                "catchment dataset without catchment row");
  count_orphans("SELECT id FROM datasets WHERE kind = 'asset' AND id NOT IN (SELECT id FROM assets)",
                "asset dataset without asset row");
  count_orphans("SELECT id FROM series WHERE station_id NOT IN (SELECT id FROM stations)", "series with unknown station");
  count_orphans("SELECT id FROM datasets WHERE study_area NOT IN (SELECT id FROM study_areas)",
                "dataset in unknown study area");

  std::map<std::string, int> heads;
  {
    Stmt q(db_, "SELECT id, head_version FROM series");
    while (q.step()) heads[q.text(0)] = static_cast<int>(q.integer(1));
  }
  std::map<std::string, int> seen;
  Stmt q(db_,
         "SELECT v.series_id, v.version, v.parent_version, v.start_date, v.end_date, v.vals, v.slots, v.correction, "
         "v.digest, s.station_id, s.variable FROM series_versions v JOIN series s ON s.id = v.series_id "
         "ORDER BY v.series_id, v.version");
  while (q.step()) {
    DailySeries s;
    s.id = q.text(0);
    const std::string where = s.id + " v" + std::to_string(q.integer(1));
    try {
      s.version = static_cast<int>(q.integer(1));
      if (!q.is_null(2)) s.parent_version = static_cast<int>(q.integer(2));
      s.start = Date::parse_iso(q.text(3));
      s.end = Date::parse_iso(q.text(4));
      s.station_id = q.text(9);
      s.variable = Variable::parse(q.text(10));
      const auto vals = q.blob(5), slots = q.blob(6);
      decode_into(s, vals, slots);
      if (auto c = q.opt_text(7)) s.correction = parse_json_as<CorrectionRecord>(*c);
      if (digest_of(s, vals, slots) != q.text(8)) problems.push_back(where + ": digest mismatch");
      for (const auto& v : validate_series(s)) problems.push_back(where + ": " + v.message);
      int& expected = seen[s.id];
      if (s.version != expected + 1) problems.push_back(where + ": version chain is not contiguous");
      if (s.version > 1 && s.parent_version != std::optional<int>(s.version - 1)) {
        problems.push_back(where + ": parent is not the previous version");
      }
      expected = s.version;
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  }
  for (const auto& [id, head] : heads) {
    if (seen[id] != head) problems.push_back(id + ": head version " + std::to_string(head) + " not stored");
  }
  {
    Stmt a(db_, "SELECT id, json, bytes FROM assets");
    while (a.step()) {
      const auto meta = parse_json_as<Asset>(a.text(1));
      if (sha256_hex(a.blob(2)) != meta.checksum) problems.push_back("asset " + a.text(0) + ": checksum mismatch");
    }
  }
  return problems;
}

}  // namespace basinfo
