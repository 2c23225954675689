#include "basinfo/catalogue.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "basinfo/digest.hpp"
#include "basinfo/error.hpp"

namespace basinfo {
namespace {

constexpr const char* kNamespaces =
    " xmlns:csw=\"http://www.opengis.net/cat/csw/2.0.2\""
    " xmlns:dc=\"http://purl.org/dc/elements/1.1/\""
    " xmlns:dct=\"http://purl.org/dc/terms/\""
    " xmlns:ows=\"http://www.opengis.net/ows\""
    " xmlns:xlink=\"http://www.w3.org/1999/xlink\"";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string coord(double v) { return shortest_double(v); }

}  // namespace

std::string_view to_string(RecordType t) {
  switch (t) {
    case RecordType::Series: return "series";
    case RecordType::Station: return "station";
    case RecordType::Vector: return "vector";
    case RecordType::Raster: return "raster";
    case RecordType::Document: return "document";
    case RecordType::Catchment: return "catchment";
  }
  return "";
}

std::optional<RecordType> parse_record_type(std::string_view name) {
  const auto key = lower(name);
  for (auto t : {RecordType::Series, RecordType::Station, RecordType::Vector, RecordType::Raster,
                 RecordType::Document, RecordType::Catchment}) {
    if (to_string(t) == key) return t;
  }
  return std::nullopt;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters other than tab/newline are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') out += ' ';
        else out += c;
    }
  }
  return out;
}

namespace csw {

bool Filter::matches(const MetadataRecord& r) const {
  if (type && r.type != *type) return false;
  if (keyword) {
    const auto needle = lower(*keyword);
    bool hit = lower(r.title).find(needle) != std::string::npos;
    for (const auto& k : r.keywords) hit = hit || lower(k).find(needle) != std::string::npos;
    if (!hit) return false;
  }
  return true;
}

Filter parse_constraint(std::string_view cql) {
  static const std::regex kAnd(R"(\s+AND\s+)", std::regex::icase);
  static const std::regex kLike(R"(^\s*(AnyText|csw:AnyText)\s+LIKE\s+'%?([^'%]*)%?'\s*$)", std::regex::icase);
  static const std::regex kType(R"(^\s*(dc:type|type)\s*=\s*'([^']*)'\s*$)", std::regex::icase);
  Filter f;
  const std::string text(cql);
  if (text.find_first_not_of(" \t") == std::string::npos) return f;
  for (std::sregex_token_iterator it(text.begin(), text.end(), kAnd, -1), end; it != end; ++it) {
    const std::string clause = *it;
    std::smatch m;
    if (std::regex_match(clause, m, kLike)) {
      if (f.keyword) throw Error(ErrorCode::InvalidArgument, "only one AnyText clause is supported");
      f.keyword = m[2].str();
    } else if (std::regex_match(clause, m, kType)) {
      auto t = parse_record_type(m[2].str());
      if (!t) throw Error(ErrorCode::InvalidArgument, "unknown record type '" + m[2].str() + "'");
      if (f.type) throw Error(ErrorCode::InvalidArgument, "only one dc:type clause is supported");
      f.type = t;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unsupported constraint clause '" + clause + "'");
    }
  }
  return f;
}

std::string exception_report(std::string_view code, std::string_view locator, std::string_view text) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<ows:ExceptionReport xmlns:ows=\"http://www.opengis.net/ows\" version=\"1.2.0\">\n";
  out += "  <ows:Exception exceptionCode=\"" + xml_escape(code) + "\"";
  if (!locator.empty()) out += " locator=\"" + xml_escape(locator) + "\"";
  out += ">\n    <ows:ExceptionText>" + xml_escape(text) + "</ows:ExceptionText>\n";
  out += "  </ows:Exception>\n</ows:ExceptionReport>\n";
  return out;
}

std::string capabilities(std::string_view base_url) {
  const std::string href = xml_escape(std::string(base_url) + "/csw?");
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<csw:Capabilities";
  out += kNamespaces;
  out += " version=\"2.0.2\">\n";
  out += "  <ows:ServiceIdentification>\n"
         "    <ows:Title>River basin information system catalogue</ows:Title>\n"
         "    <ows:Abstract>Metadata records for hydro-meteorological series, stations, catchments and assets</ows:Abstract>\n"
         "    <ows:ServiceType>CSW</ows:ServiceType>\n"
         "    <ows:ServiceTypeVersion>2.0.2</ows:ServiceTypeVersion>\n"
         "  </ows:ServiceIdentification>\n";
  out += "  <ows:OperationsMetadata>\n";
  for (const char* op : {"GetCapabilities", "GetRecords", "GetRecordById"}) {
    out += "    <ows:Operation name=\"";
    out += op;
    out += "\">\n      <ows:DCP>\n        <ows:HTTP>\n          <ows:Get xlink:href=\"" + href +
           "\"/>\n        </ows:HTTP>\n      </ows:DCP>\n";
    if (std::string_view(op) == "GetRecords") {
      out += "      <ows:Parameter name=\"constraintLanguage\">\n"
             "        <ows:Value>CQL_TEXT</ows:Value>\n"
             "      </ows:Parameter>\n"
             "      <ows:Parameter name=\"typeNames\">\n"
             "        <ows:Value>csw:Record</ows:Value>\n"
             "      </ows:Parameter>\n";
    }
    out += "    </ows:Operation>\n";
  }
  out += "    <ows:Parameter name=\"service\">\n      <ows:Value>CSW</ows:Value>\n    </ows:Parameter>\n";
  out += "    <ows:Parameter name=\"version\">\n      <ows:Value>2.0.2</ows:Value>\n    </ows:Parameter>\n";
  out += "  </ows:OperationsMetadata>\n";
  out += "</csw:Capabilities>\n";
  return out;
}

std::string record_xml(const MetadataRecord& r) {
  std::string out = "    <csw:Record>\n";
  out += "      <dc:identifier>" + xml_escape(r.identifier) + "</dc:identifier>\n";
  out += "      <dc:title>" + xml_escape(r.title) + "</dc:title>\n";
  out += "      <dc:type>" + std::string(to_string(r.type)) + "</dc:type>\n";
  for (const auto& k : r.keywords) out += "      <dc:subject>" + xml_escape(k) + "</dc:subject>\n";
  out += "      <dct:abstract>" + xml_escape(r.abstract) + "</dct:abstract>\n";
  out += "      <dct:modified>" + xml_escape(r.modified) + "</dct:modified>\n";
  if (r.temporal) {
    out += "      <dct:temporal>" + r.temporal->first.iso() + "/" + r.temporal->last.iso() + "</dct:temporal>\n";
  }
  if (r.bbox) {
    out += "      <ows:BoundingBox crs=\"urn:ogc:def:crs:OGC:1.3:CRS84\">\n";
    out += "        <ows:LowerCorner>" + coord(r.bbox->min_lon) + " " + coord(r.bbox->min_lat) + "</ows:LowerCorner>\n";
    out += "        <ows:UpperCorner>" + coord(r.bbox->max_lon) + " " + coord(r.bbox->max_lat) + "</ows:UpperCorner>\n";
    out += "      </ows:BoundingBox>\n";
  }
  out += "    </csw:Record>\n";
  return out;
}

std::string get_records(std::span<const MetadataRecord> records, const Filter& filter,
                        std::size_t start_position, std::size_t max_records, std::string_view timestamp) {
  std::vector<const MetadataRecord*> matched;
  for (const auto& r : records) {
    if (filter.matches(r)) matched.push_back(&r);
  }
  std::sort(matched.begin(), matched.end(),
            [](const auto* a, const auto* b) { return a->identifier < b->identifier; });
  const std::size_t first = start_position - 1;
  const std::size_t returned = first >= matched.size() ? 0 : std::min(max_records, matched.size() - first);
  const std::size_t next = first + returned < matched.size() ? start_position + returned : 0;

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<csw:GetRecordsResponse";
  out += kNamespaces;
  out += " version=\"2.0.2\">\n";
  out += "  <csw:SearchStatus timestamp=\"" + xml_escape(timestamp) + "\"/>\n";
  out += "  <csw:SearchResults numberOfRecordsMatched=\"" + std::to_string(matched.size()) +
         "\" numberOfRecordsReturned=\"" + std::to_string(returned) + "\" nextRecord=\"" +
         std::to_string(next) + "\" elementSet=\"full\">\n";
  for (std::size_t i = 0; i < returned; ++i) out += record_xml(*matched[first + i]);
  out += "  </csw:SearchResults>\n</csw:GetRecordsResponse>\n";
  return out;
}

std::string get_record_by_id(const MetadataRecord& r) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<csw:GetRecordByIdResponse";
  out += kNamespaces;
  out += ">\n";
  out += record_xml(r);
  out += "</csw:GetRecordByIdResponse>\n";
  return out;
}

Response handle(const std::multimap<std::string, std::string>& params,
                std::span<const MetadataRecord> visible_records, std::string_view base_url,
                std::string_view timestamp) {
  std::map<std::string, std::string> kvp;
  for (const auto& [k, v] : params) kvp.emplace(lower(k), v);
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kvp.find(key);
    if (it == kvp.end()) return std::nullopt;
    return it->second;
  };
  auto fail = [](std::string_view code, std::string_view locator, std::string_view text) {
    return Response{200, exception_report(code, locator, text), true};
  };

  const auto service = get("service");
  if (!service) return fail("MissingParameterValue", "service", "service parameter is required");
  if (lower(*service) != "csw") return fail("InvalidParameterValue", "service", "service must be CSW");
  const auto request = get("request");
  if (!request) return fail("MissingParameterValue", "request", "request parameter is required");

  if (*request == "GetCapabilities") {
    if (auto versions = get("acceptversions")) {
      if (versions->find("2.0.2") == std::string::npos) {
        return fail("VersionNegotiationFailed", "acceptVersions", "only version 2.0.2 is supported");
      }
    }
    if (auto version = get("version"); version && *version != kVersion) {
      return fail("VersionNegotiationFailed", "version", "only version 2.0.2 is supported");
    }
    return {200, capabilities(base_url), false};
  }

  const auto version = get("version");
  if (!version) return fail("MissingParameterValue", "version", "version parameter is required");
  if (*version != kVersion) return fail("VersionNegotiationFailed", "version", "only version 2.0.2 is supported");

  if (*request == "GetRecords") {
    Filter filter;
    try {
      if (auto c = get("constraint")) {
        if (auto lang = get("constraintlanguage"); lang && lower(*lang) != "cql_text") {
          return fail("InvalidParameterValue", "constraintLanguage", "only CQL_TEXT is supported");
        }
        filter = parse_constraint(*c);
      }
      if (auto k = get("keyword")) filter.keyword = *k;
      if (auto t = get("type")) {
        auto parsed = parse_record_type(*t);
        if (!parsed) return fail("InvalidParameterValue", "type", "unknown record type '" + *t + "'");
        filter.type = parsed;
      }
    } catch (const Error& e) {
      return fail("InvalidParameterValue", "constraint", e.what());
    }
    auto number = [&](const char* key, std::size_t fallback) -> std::optional<std::size_t> {
      auto v = get(key);
      if (!v) return fallback;
      if (v->empty() || v->size() > 9 || v->find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
      return static_cast<std::size_t>(std::stoul(*v));
    };
    auto start = number("startposition", 1);
    auto max = number("maxrecords", 10);
    if (!start || *start < 1) return fail("InvalidParameterValue", "startPosition", "startPosition must be >= 1");
    if (!max || *max < 1 || *max > 1000) {
      return fail("InvalidParameterValue", "maxRecords", "maxRecords must lie in [1, 1000]");
    }
    return {200, get_records(visible_records, filter, *start, *max, timestamp), false};
  }

  if (*request == "GetRecordById") {
    const auto id = get("id");
    if (!id) return fail("MissingParameterValue", "id", "id parameter is required");
    for (const auto& r : visible_records) {
      if (r.identifier == *id) return {200, get_record_by_id(r), false};
    }
    return fail("InvalidParameterValue", "id", "no record with identifier '" + *id + "'");
  }

  return fail("OperationNotSupported", "request", "operation '" + *request + "' is not supported");
}

}  // namespace csw
}  // namespace basinfo
