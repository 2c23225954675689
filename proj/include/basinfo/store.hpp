#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "basinfo/catalogue.hpp"
#include "basinfo/geodata.hpp"
#include "basinfo/model.hpp"
#include "basinfo/permissions.hpp"

struct sqlite3;

namespace basinfo {

struct StudyArea {
  std::string id;
  std::string name;
  std::optional<std::string> root_catchment_id;
  std::string owner;
};

struct User {
  std::string id;
  std::string username;
  std::string verifier;  // encoded PasswordVerifier, never leaves the server
  std::vector<std::string> groups;
  bool is_admin = false;
};

enum class DatasetKind { Series, Station, Catchment, Asset };
std::string_view to_string(DatasetKind k);

struct DatasetRef {
  DatasetKind kind = DatasetKind::Series;
  ObjectRef object;
};

struct SeriesInfo {
  std::string id;
  std::string station_id;
  Variable variable;
  std::string study_area;
  std::string owner;
  int head_version = 1;
};

/// SHA-256 over the canonical byte form of one series version.
std::string series_digest(const DailySeries& s);

/// Embedded durable store (SQLite, write-ahead log, full fsync). Series
/// versions are append-only; every dataset row is created in the same
/// transaction as its catalogue record.
class Store {
 public:
  explicit Store(const std::filesystem::path& db_file);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Runs `fn` inside one write transaction; nested calls join the outer one.
  void transaction(const std::function<void()>& fn);

  std::optional<std::string> setting(const std::string& key) const;
  void set_setting(const std::string& key, const std::string& value);

  void put_study_area(const StudyArea& a);
  std::optional<StudyArea> study_area(const std::string& id) const;
  std::vector<StudyArea> study_areas() const;

  void add_user(const User& u);  // Conflict on duplicate username
  std::optional<User> user(const std::string& id) const;
  std::optional<User> user_by_name(const std::string& username) const;
  std::vector<User> users() const;

  void add_grant(const PermissionGrant& g);
  std::vector<PermissionGrant> grants() const;

  std::optional<DatasetRef> dataset(const std::string& id) const;

  void create_station(const Station& s, const std::string& study_area, const std::string& owner,
                      const MetadataRecord& record);
  std::optional<Station> station(const std::string& id) const;
  std::vector<Station> stations() const;
  void set_station_catchment(const std::string& station_id, const std::optional<std::string>& catchment_id);

  void create_series(const DailySeries& v1, const std::string& study_area, const std::string& owner,
                     const MetadataRecord& record);
  /// Appends `next` (version expected_head + 1). Throws StaleWrite when the
  /// stored head differs from `expected_head`.
  void commit_version(const DailySeries& next, int expected_head, const std::string& committed_at);
  std::optional<SeriesInfo> series_info(const std::string& id) const;
  std::vector<SeriesInfo> series_list() const;
  std::size_t series_count() const;
  /// Head version when `version` is empty. Throws UnknownSeries / NotFound.
  DailySeries load_series(const std::string& id, std::optional<int> version = std::nullopt) const;
  std::vector<DailySeries> load_versions(const std::string& id) const;
  GapReport gap_report(const std::string& id, int version) const;
  std::string stored_digest(const std::string& id, int version) const;

  void create_catchment(const Catchment& c, const std::string& study_area, const std::string& owner,
                        const MetadataRecord& record);
  std::optional<Catchment> catchment(const std::string& id) const;
  std::vector<Catchment> catchments() const;

  void create_asset(const Asset& a, std::string_view bytes, const std::string& study_area,
                    const std::string& owner, const MetadataRecord& record);
  std::optional<Asset> asset(const std::string& id) const;
  std::string asset_bytes(const std::string& id) const;

  std::vector<MetadataRecord> metadata() const;
  std::optional<MetadataRecord> metadata(const std::string& identifier) const;

  /// Integrity sweep; returns human-readable problems (empty when clean).
  std::vector<std::string> validate() const;

 private:
  class Tx;
  void exec(const char* sql) const;
  void insert_dataset(const std::string& id, DatasetKind kind, const std::string& study_area,
                      const std::string& owner, const MetadataRecord& record);
  void insert_version(const DailySeries& s, const std::string& committed_at);

  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mu_;
  int tx_depth_ = 0;
};

}  // namespace basinfo
