#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "basinfo/model.hpp"

namespace basinfo {

/// Layout of a delimited agency text file.
struct FormatSpec {
  char delimiter = '\t';
  /// Pattern over the tokens YYYY, MM and DD; any other character is a literal.
  std::string date_format = "YYYY-MM-DD";
  std::vector<std::string> missing_codes = {"-9999"};
  char decimal_separator = '.';
  int date_column = 0;
  int value_column = 1;
  int header_lines = 0;

  /// Throws InvalidArgument describing the first broken invariant.
  void validate() const;

  bool operator==(const FormatSpec&) const = default;
};

void to_json(nlohmann::json& j, const FormatSpec& f);
void from_json(const nlohmann::json& j, FormatSpec& f);
FormatSpec parse_format_spec(std::string_view json_text);

/// Parses `raw` into a raw version-1 series. Dates absent from the file and
/// values equal to a missing code become missing slots. Lines starting with
/// '#' are comments. Fail-fast: the first bad line raises ParseError with its
/// 1-based line number in Error::detail().
DailySeries parse_series(std::string_view raw, const FormatSpec& spec, std::string series_id,
                         std::string station_id, Variable variable);

/// One parsed data row; used where a file supplies sparse values (external fills).
struct ParsedRow {
  Date date;
  Slot value;
  int line = 0;
};
std::vector<ParsedRow> parse_rows(std::string_view raw, const FormatSpec& spec);

std::string format_date(Date d, std::string_view pattern);
std::string format_value(double v, char decimal_separator);

/// Delimited rows for every slot of `s`; missing slots use the first missing code.
std::string render_rows(const DailySeries& s, const FormatSpec& spec);

GapReport detect_gaps(const DailySeries& s);

}  // namespace basinfo
