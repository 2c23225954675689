#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "basinfo/date.hpp"
#include "basinfo/geodata.hpp"

namespace basinfo {

enum class RecordType { Series, Station, Vector, Raster, Document, Catchment };
std::string_view to_string(RecordType t);
std::optional<RecordType> parse_record_type(std::string_view name);

/// Dublin-Core-style catalogue entry.
struct MetadataRecord {
  std::string identifier;
  std::string title;
  std::string abstract;
  std::vector<std::string> keywords;
  RecordType type = RecordType::Series;
  std::optional<BoundingBox> bbox;
  std::optional<DateRange> temporal;
  std::string modified;  // ISO-8601 UTC timestamp

  bool operator==(const MetadataRecord&) const = default;
};

std::string xml_escape(std::string_view s);

namespace csw {

inline constexpr std::string_view kVersion = "2.0.2";

struct Filter {
  std::optional<std::string> keyword;
  std::optional<RecordType> type;

  bool matches(const MetadataRecord& r) const;
};

/// Parses the CQL_TEXT subset: clauses joined by AND, each either
/// `AnyText LIKE '%term%'` or `dc:type = 'series'`. Throws InvalidArgument.
Filter parse_constraint(std::string_view cql);

struct Response {
  int status = 200;
  std::string body;
  bool exception = false;
};

std::string exception_report(std::string_view code, std::string_view locator, std::string_view text);
std::string capabilities(std::string_view base_url);
std::string record_xml(const MetadataRecord& r);

/// `records` must already be restricted to what the requester may see.
std::string get_records(std::span<const MetadataRecord> records, const Filter& filter,
                        std::size_t start_position, std::size_t max_records, std::string_view timestamp);
std::string get_record_by_id(const MetadataRecord& r);

/// Dispatches a KVP GET request (keys are matched case-insensitively).
Response handle(const std::multimap<std::string, std::string>& params,
                std::span<const MetadataRecord> visible_records, std::string_view base_url,
                std::string_view timestamp);

}  // namespace csw
}  // namespace basinfo
