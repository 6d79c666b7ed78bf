#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tls_assist/harness.hpp"

namespace tls_assist {

class ReportError : public Error {
 public:
  using Error::Error;
};

// Machine-readable report: {"manifest", "plan", "rows"}. Rows keep per-route records so
// aggregates can be recomputed.
nlohmann::ordered_json report_to_json(const BenchmarkReport& report,
                                      const nlohmann::ordered_json& manifest);
// Throws ReportError on a malformed document.
BenchmarkReport report_from_json(const nlohmann::ordered_json& doc);

// DS / RC / IS per track and overall, one line per variant.
std::string format_score_table(const BenchmarkReport& report);
// Mean infraction counts per variant with relative change against the first row.
std::string format_infraction_table(const BenchmarkReport& report);
std::string format_compare(const std::vector<RowDelta>& deltas);

}  // namespace tls_assist
