#pragma once

#include <nlohmann/json.hpp>

#include "basinfo/analysis.hpp"
#include "basinfo/catalogue.hpp"
#include "basinfo/correction.hpp"
#include "basinfo/geodata.hpp"
#include "basinfo/model.hpp"
#include "basinfo/permissions.hpp"

// nlohmann adapters for the domain types. Field names are the camelCase
// spelling used on the HTTP API.
namespace basinfo {

void to_json(nlohmann::json& j, const Date& d);
void from_json(const nlohmann::json& j, Date& d);
void to_json(nlohmann::json& j, const DateRange& r);
void from_json(const nlohmann::json& j, DateRange& r);

void to_json(nlohmann::json& j, const CorrectionRecord& r);
void from_json(const nlohmann::json& j, CorrectionRecord& r);
/// Canonical byte form of a record (sorted keys, no whitespace).
std::string canonical_json(const CorrectionRecord& r);

void to_json(nlohmann::json& j, const Station& s);
void from_json(const nlohmann::json& j, Station& s);

void to_json(nlohmann::json& j, const GapReport& g);
void to_json(nlohmann::json& j, const BasicStats& s);
void to_json(nlohmann::json& j, const Trend& t);
void to_json(nlohmann::json& j, const Correlation& c);
void to_json(nlohmann::json& j, const Availability& a);
void to_json(nlohmann::json& j, const AggregateRow& r);
void to_json(nlohmann::json& j, const CoverageReport& c);
void to_json(nlohmann::json& j, const OutlierFlag& f);
void from_json(const nlohmann::json& j, OutlierFlag& f);

void to_json(nlohmann::json& j, const BoundingBox& b);
void from_json(const nlohmann::json& j, BoundingBox& b);
void to_json(nlohmann::json& j, const MetadataRecord& r);
void from_json(const nlohmann::json& j, MetadataRecord& r);
void to_json(nlohmann::json& j, const Asset& a);
void from_json(const nlohmann::json& j, Asset& a);

AggregationPolicy aggregation_policy_from_json(const nlohmann::json& j);

/// Series header without values.
nlohmann::json series_summary_json(const DailySeries& s);
/// Dense value array with explicit nulls, plus flags.
nlohmann::json series_data_json(const DailySeries& s, std::optional<DateRange> window = std::nullopt);

}  // namespace basinfo
