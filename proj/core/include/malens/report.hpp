#pragma once

// Count distributions over token languages and word verdicts, and their
// serialization as text tables, CSV and JSON.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "malens/neighbor.hpp"
#include "malens/verdict.hpp"

namespace malens {

/// WordVerdict counts decipherable words only; WordVerdictAll includes Unclear.
enum class ReportAxis { TokenLanguage, WordVerdict, WordVerdictAll };

std::string_view to_string(ReportAxis axis) noexcept;
ReportAxis parse_report_axis(std::string_view name);

struct Bucket {
  std::string label;
  std::size_t count = 0;
  double fraction = 0.0;

  bool operator==(const Bucket&) const = default;
};

struct DistributionReport {
  std::string corpus_id;
  ReportAxis axis = ReportAxis::TokenLanguage;
  /// Ordered by count descending, then label.
  std::vector<Bucket> buckets;
  /// Items counted in the buckets.
  std::size_t total = 0;
  /// Items left out: sentinel frames, or Unclear words on the WordVerdict axis.
  std::size_t excluded = 0;
  /// decipherable / all words; WordVerdict axis only.
  std::optional<double> decipherable_fraction;

  bool operator==(const DistributionReport&) const = default;
};

/// Builds a report from raw counts; fractions are count / total.
DistributionReport make_report(std::string corpus_id, ReportAxis axis,
                               const std::map<std::string, std::size_t>& counts,
                               std::size_t excluded = 0);

/// Frames without a neighbor are excluded; frames without a language count as
/// "und". NoAssignments when no frame has a neighbor.
DistributionReport token_language_distribution(std::string corpus_id,
                                               std::span<const NeighborAssignment> assignments);

/// Fractions over decipherable words. EmptyInput without words,
/// NoDecipherableWords when every word is Unclear.
DistributionReport verdict_distribution(std::string corpus_id,
                                        std::span<const WordVerdict> verdicts);

/// Every verdict including Unclear. EmptyInput without words.
DistributionReport verdict_distribution_all(std::string corpus_id,
                                            std::span<const WordVerdict> verdicts);

/// Report of the union of two disjoint inputs. InvalidArgument on differing axes.
DistributionReport merge(const DistributionReport& a, const DistributionReport& b,
                         std::string corpus_id);

enum class ReportFormat { Table, DelimitedValues, StructuredText };

std::string_view to_string(ReportFormat format) noexcept;
ReportFormat parse_report_format(std::string_view name);

std::string render(const DistributionReport& report, ReportFormat format);
/// Several reports in one document (one CSV header, one JSON array).
std::string render(std::span<const DistributionReport> reports, ReportFormat format);

/// IoFailure when the file cannot be written.
void emit(const DistributionReport& report, ReportFormat format,
          const std::filesystem::path& path);

nlohmann::json to_json(const DistributionReport& report);
DistributionReport distribution_report_from_json(const nlohmann::json& value);

}  // namespace malens
