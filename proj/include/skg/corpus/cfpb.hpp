#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "skg/core/case.hpp"

namespace skg::corpus {

/// RFC 4180 rows: quoted fields may hold commas, doubled quotes and line
/// breaks. Throws MalformedCsv with the 1-based line of the problem.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct CfpbLabels {
  std::string product;
  std::string issue;
};

struct CfpbIngest {
  std::vector<ComplaintCase> cases;
  std::map<std::string, CfpbLabels> labels;  // by case_id
  std::size_t skipped = 0;                   // rows without a narrative
};

/// One case per row with a nonempty narrative, case_id "cfpb-<Complaint ID>".
/// Required columns: Complaint ID, Product, Issue, Consumer complaint
/// narrative (MissingColumns lists the absent ones). limit 0 means all rows.
CfpbIngest ingest_cfpb_csv(std::string_view csv_text, std::size_t limit = 0);
CfpbIngest ingest_cfpb_file(const std::string& path, std::size_t limit = 0);

}  // namespace skg::corpus
