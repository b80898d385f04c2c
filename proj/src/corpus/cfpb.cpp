#include "skg/corpus/cfpb.hpp"

#include <algorithm>

#include "skg/error.hpp"
#include "skg/util/text.hpp"

namespace skg::corpus {

namespace {

constexpr std::string_view kId = "Complaint ID";
constexpr std::string_view kProduct = "Product";
constexpr std::string_view kIssue = "Issue";
constexpr std::string_view kNarrative = "Consumer complaint narrative";

// Optional columns copied into case metadata, with their metadata keys.
const std::vector<std::pair<std::string, std::string>>& optional_columns() {
  static const std::vector<std::pair<std::string, std::string>> v{
      {"Sub-product", "sub_product"},   {"Sub-issue", "sub_issue"},
      {"Company", "company"},           {"State", "state"},
      {"Submitted via", "submitted_via"}, {"Company response to consumer", "company_response"},
      {"Timely response?", "timely_response"}};
  return v;
}

// Dates come as YYYY-MM-DD or MM/DD/YYYY.
std::optional<Timestamp> parse_date(const std::string& s) {
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') return Timestamp::parse(s + "T00:00:00Z");
  if (s.size() == 10 && s[2] == '/' && s[5] == '/') {
    return Timestamp::parse(s.substr(6, 4) + "-" + s.substr(0, 2) + "-" + s.substr(3, 2) + "T00:00:00Z");
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
          if (i + 1 < text.size() && text[i + 1] != ',' && text[i + 1] != '\n' && text[i + 1] != '\r') {
            throw Error(Errc::MalformedCsv, "text after closing quote", {{"line", line}});
          }
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || !field.empty()) throw Error(Errc::MalformedCsv, "quote inside unquoted field", {{"line", line}});
        quoted = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_row();
        ++line;
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default: field.push_back(ch);
    }
  }
  if (quoted) throw Error(Errc::MalformedCsv, "unterminated quoted field", {{"line", line}});
  if (!field.empty() || field_started || !row.empty()) end_row();
  return rows;
}

CfpbIngest ingest_cfpb_csv(std::string_view csv_text, std::size_t limit) {
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) throw Error(Errc::MalformedCsv, "missing header row", {{"line", 1}});
  const auto& header = rows.front();
  const auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::string> missing;
  for (auto name : {kId, kProduct, kIssue, kNarrative}) {
    if (!column(name)) missing.emplace_back(name);
  }
  if (!missing.empty()) {
    throw Error(Errc::MissingColumns, "CSV lacks required columns: " + util::join(missing, ", "), {{"missing", missing}});
  }
  const auto id_col = *column(kId);
  const auto product_col = *column(kProduct);
  const auto issue_col = *column(kIssue);
  const auto narrative_col = *column(kNarrative);
  const auto date_col = column("Date received");

  CfpbIngest out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (limit != 0 && out.cases.size() + out.skipped >= limit) break;
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(Errc::MalformedCsv, "row has " + std::to_string(row.size()) + " fields, header has " +
                                          std::to_string(header.size()),
                  {{"row", r}});
    }
    const auto narrative = util::trim(row[narrative_col]);
    if (narrative.empty()) {
      ++out.skipped;
      continue;
    }
    const auto id = util::trim(row[id_col]);
    if (id.empty()) throw Error(Errc::MalformedCsv, "empty Complaint ID", {{"row", r}});
    ComplaintCase c;
    c.case_id = "cfpb-" + id;
    c.narrative = row[narrative_col];
    c.metadata["product"] = Value(row[product_col]);
    c.metadata["issue"] = Value(row[issue_col]);
    for (const auto& [name, key] : optional_columns()) {
      if (const auto col = column(name); col && !row[*col].empty()) c.metadata[key] = Value(row[*col]);
    }
    if (date_col) {
      if (const auto when = parse_date(util::trim(row[*date_col]))) c.metadata["created_at"] = Value(*when);
    }
    out.labels[c.case_id] = {row[product_col], row[issue_col]};
    out.cases.push_back(std::move(c));
  }
  return out;
}

CfpbIngest ingest_cfpb_file(const std::string& path, std::size_t limit) {
  return ingest_cfpb_csv(util::read_file(path), limit);
}

}  // namespace skg::corpus
