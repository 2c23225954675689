#include "basinfo/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "basinfo/error.hpp"

namespace basinfo {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

// Returns the 1-based line of the first malformed UTF-8 sequence, or 0.
int first_invalid_utf8_line(std::string_view s) {
  int line = 1;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == '\n') ++line;
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c >> 5) == 0x6 && c >= 0xC2) len = 2;
    else if ((c >> 4) == 0xE) len = 3;
    else if ((c >> 3) == 0x1E && c <= 0xF4) len = 4;
    else return line;
    if (i + len > s.size()) return line;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return line;
    }
    i += len;
  }
  return 0;
}

Error parse_error(int line, const std::string& what) {
  return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what,
               std::to_string(line));
}

template <class Int>
bool parse_fixed_digits(std::string_view text, std::size_t pos, std::size_t len, Int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t k = pos; k < pos + len; ++k) {
    if (text[k] < '0' || text[k] > '9') return false;
  }
  auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc() && p == text.data() + pos + len;
}

std::optional<Date> parse_date(std::string_view text, std::string_view pattern) {
  int year = 0;
  unsigned month = 0, day = 0;
  std::size_t t = 0;
  std::size_t p = 0;
  while (p < pattern.size()) {
    if (pattern.substr(p, 4) == "YYYY") {
      if (!parse_fixed_digits(text, t, 4, year)) return std::nullopt;
      p += 4;
      t += 4;
    } else if (pattern.substr(p, 2) == "MM") {
      if (!parse_fixed_digits(text, t, 2, month)) return std::nullopt;
      p += 2;
      t += 2;
    } else if (pattern.substr(p, 2) == "DD") {
      if (!parse_fixed_digits(text, t, 2, day)) return std::nullopt;
      p += 2;
      t += 2;
    } else {
      if (t >= text.size() || text[t] != pattern[p]) return std::nullopt;
      ++p;
      ++t;
    }
  }
  if (t != text.size()) return std::nullopt;
  return Date::try_from_ymd(year, month, day);
}

std::optional<double> parse_number(std::string_view text, char decimal_separator) {
  if (text.empty()) return std::nullopt;
  std::string buf(text);
  if (decimal_separator != '.') {
    if (buf.find('.') != std::string::npos) return std::nullopt;
    std::replace(buf.begin(), buf.end(), decimal_separator, '.');
  }
  std::size_t start = buf[0] == '+' ? 1 : 0;
  double v = 0;
  auto [ptr, ec] = std::from_chars(buf.data() + start, buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t count_token(std::string_view s, std::string_view token) {
  std::size_t n = 0;
  for (auto pos = s.find(token); pos != std::string_view::npos; pos = s.find(token, pos + 1)) ++n;
  return n;
}

}  // namespace

void FormatSpec::validate() const {
  auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidArgument, what); };
  if (decimal_separator != '.' && decimal_separator != ',') {
    throw bad("decimal separator must be '.' or ','");
  }
  if (delimiter == decimal_separator) throw bad("delimiter equals decimal separator");
  if (delimiter == '\n' || delimiter == '\r' || delimiter == '#') throw bad("invalid delimiter");
  if (date_column < 0 || value_column < 0) throw bad("column indices must be >= 0");
  if (date_column == value_column) throw bad("date column equals value column");
  if (header_lines < 0) throw bad("header line count must be >= 0");
  if (missing_codes.empty()) throw bad("at least one missing code is required");
  for (const auto& code : missing_codes) {
    if (code.empty() || code.find(delimiter) != std::string::npos) throw bad("invalid missing code");
  }
  if (count_token(date_format, "YYYY") != 1 || count_token(date_format, "MM") != 1 ||
      count_token(date_format, "DD") != 1) {
    throw bad("date format must contain YYYY, MM and DD exactly once");
  }
  if (date_format.find(delimiter) != std::string::npos) {
    throw bad("date format contains the delimiter");
  }
}

void to_json(nlohmann::json& j, const FormatSpec& f) {
  j = nlohmann::json{{"delimiter", std::string(1, f.delimiter)},
                     {"dateFormat", f.date_format},
                     {"missingCodes", f.missing_codes},
                     {"decimalSeparator", std::string(1, f.decimal_separator)},
                     {"dateColumn", f.date_column},
                     {"valueColumn", f.value_column},
                     {"headerLines", f.header_lines}};
}

void from_json(const nlohmann::json& j, FormatSpec& f) {
  static const char* kKeys[] = {"delimiter",        "dateFormat", "missingCodes", "decimalSeparator",
                                "dateColumn",       "valueColumn", "headerLines"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "format spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw Error(ErrorCode::InvalidArgument, "unknown format spec key '" + key + "'", key);
    }
  }
  FormatSpec out;
  try {
    auto single_char = [](const nlohmann::json& v, const char* key) {
      auto s = v.get<std::string>();
      if (s == "\\t") s = "\t";
      if (s.size() != 1) {
        throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a single character", key);
      }
      return s[0];
    };
    if (j.contains("delimiter")) out.delimiter = single_char(j["delimiter"], "delimiter");
    if (j.contains("dateFormat")) out.date_format = j["dateFormat"].get<std::string>();
    if (j.contains("missingCodes")) out.missing_codes = j["missingCodes"].get<std::vector<std::string>>();
    if (j.contains("decimalSeparator")) {
      out.decimal_separator = single_char(j["decimalSeparator"], "decimalSeparator");
    }
    if (j.contains("dateColumn")) out.date_column = j["dateColumn"].get<int>();
    if (j.contains("valueColumn")) out.value_column = j["valueColumn"].get<int>();
    if (j.contains("headerLines")) out.header_lines = j["headerLines"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed format spec: ") + e.what());
  }
  out.validate();
  f = std::move(out);
}

FormatSpec parse_format_spec(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("format spec is not valid JSON: ") + e.what());
  }
  return j.get<FormatSpec>();
}

std::vector<ParsedRow> parse_rows(std::string_view raw, const FormatSpec& spec) {
  spec.validate();
  if (raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
  if (int bad_line = first_invalid_utf8_line(raw)) {
    throw parse_error(bad_line, "input is not valid UTF-8");
  }
  std::vector<ParsedRow> rows;
  const auto needed = static_cast<std::size_t>(std::max(spec.date_column, spec.value_column)) + 1;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto nl = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, nl == std::string_view::npos ? raw.npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no <= spec.header_lines) continue;
    if (trim(line).empty() || line.front() == '#') continue;

    auto fields = split(line, spec.delimiter);
    if (fields.size() < needed) throw parse_error(line_no, "expected at least " + std::to_string(needed) + " fields");
    auto date_text = trim(fields[static_cast<std::size_t>(spec.date_column)]);
    auto value_text = trim(fields[static_cast<std::size_t>(spec.value_column)]);
    auto date = parse_date(date_text, spec.date_format);
    if (!date) throw parse_error(line_no, "unparseable date '" + std::string(date_text) + "'");
    ParsedRow row{*date, std::nullopt, line_no};
    const bool is_missing = std::find(spec.missing_codes.begin(), spec.missing_codes.end(),
                                      value_text) != spec.missing_codes.end();
    if (!is_missing) {
      auto v = parse_number(value_text, spec.decimal_separator);
      if (!v) throw parse_error(line_no, "unparseable value '" + std::string(value_text) + "'");
      row.value = *v;
    }
    rows.push_back(row);
  }
  return rows;
}

DailySeries parse_series(std::string_view raw, const FormatSpec& spec, std::string series_id,
                         std::string station_id, Variable variable) {
  auto rows = parse_rows(raw, spec);
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "input contains no data rows");

  std::map<Date, Slot> by_date;
  for (const auto& row : rows) {
    auto [it, inserted] = by_date.emplace(row.date, row.value);
    if (!inserted && it->second != row.value) {
      throw Error(ErrorCode::DuplicateDate,
                  "conflicting values for " + row.date.iso() + " (line " + std::to_string(row.line) + ")",
                  row.date.iso());
    }
  }
  const Date first = by_date.begin()->first;
  const Date last = by_date.rbegin()->first;
  std::vector<Slot> values(static_cast<std::size_t>(last - first + 1));
  for (const auto& [d, v] : by_date) values[static_cast<std::size_t>(d - first)] = v;
  return DailySeries::raw(std::move(series_id), std::move(station_id), variable, first, std::move(values));
}

std::string format_date(Date d, std::string_view pattern) {
  char buf[16];
  std::string out;
  std::size_t p = 0;
  while (p < pattern.size()) {
    if (pattern.substr(p, 4) == "YYYY") {
      std::snprintf(buf, sizeof buf, "%04d", d.year());
      out += buf;
      p += 4;
    } else if (pattern.substr(p, 2) == "MM") {
      std::snprintf(buf, sizeof buf, "%02u", d.month());
      out += buf;
      p += 2;
    } else if (pattern.substr(p, 2) == "DD") {
      std::snprintf(buf, sizeof buf, "%02u", d.day());
      out += buf;
      p += 2;
    } else {
      out += pattern[p++];
    }
  }
  return out;
}

std::string format_value(double v, char decimal_separator) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, ptr);
  if (decimal_separator != '.') std::replace(out.begin(), out.end(), '.', decimal_separator);
  return out;
}

std::string render_rows(const DailySeries& s, const FormatSpec& spec) {
  spec.validate();
  const int columns = std::max(spec.date_column, spec.value_column) + 1;
  std::string out;
  out.reserve(s.size() * 20);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int c = 0; c < columns; ++c) {
      if (c > 0) out += spec.delimiter;
      if (c == spec.date_column) {
        out += format_date(s.date_at(i), spec.date_format);
      } else if (c == spec.value_column) {
        out += s.values[i] ? format_value(*s.values[i], spec.decimal_separator) : spec.missing_codes.front();
      }
    }
    out += '\n';
  }
  return out;
}

GapReport detect_gaps(const DailySeries& s) {
  GapReport report;
  report.series_id = s.id;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!s.missing(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < s.size() && s.missing(j + 1)) ++j;
    report.gaps.push_back({s.date_at(i), s.date_at(j)});
    report.total_missing += static_cast<std::int64_t>(j - i + 1);
    i = j + 1;
  }
  report.fraction_available =
      s.size() == 0 ? 0.0
                    : 1.0 - static_cast<double>(report.total_missing) / static_cast<double>(s.size());
  return report;
}

}  // namespace basinfo
