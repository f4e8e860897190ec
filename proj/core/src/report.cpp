#include "malens/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/languages.hpp"

namespace malens {

using nlohmann::json;

namespace {

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), r.ptr);
}

std::string format_fixed(double value, int precision) {
  std::array<char, 64> buf{};
  const auto r =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, precision);
  return std::string(buf.data(), r.ptr);
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::map<std::string, std::size_t> counts_of(const DistributionReport& report) {
  std::map<std::string, std::size_t> counts;
  for (const auto& b : report.buckets) counts[b.label] += b.count;
  return counts;
}

void render_table(const DistributionReport& r, std::string& out) {
  out += "corpus: " + r.corpus_id + "\naxis: " + std::string(to_string(r.axis)) + "\n";
  std::size_t width = 5;
  for (const auto& b : r.buckets) width = std::max(width, b.label.size());
  out += pad_right("label", width) + "  " + pad_left("count", 8) + "  " + pad_left("fraction", 8) +
         "\n";
  for (const auto& b : r.buckets) {
    out += pad_right(b.label, width) + "  " + pad_left(std::to_string(b.count), 8) + "  " +
           pad_left(format_fixed(b.fraction, 4), 8) + "\n";
  }
  out += "total: " + std::to_string(r.total) + "  excluded: " + std::to_string(r.excluded);
  if (r.decipherable_fraction) {
    out += "  decipherable: " + format_fixed(*r.decipherable_fraction, 4);
  }
  out += "\n";
}

void render_csv_rows(const DistributionReport& r, std::string& out) {
  for (const auto& b : r.buckets) {
    out += csv_field(r.corpus_id) + "," + std::string(to_string(r.axis)) + "," +
           csv_field(b.label) + "," + std::to_string(b.count) + "," + format_double(b.fraction) +
           "\n";
  }
}

constexpr std::string_view kCsvHeader = "corpus_id,axis,label,count,fraction\n";

}  // namespace

std::string_view to_string(ReportAxis axis) noexcept {
  switch (axis) {
    case ReportAxis::TokenLanguage: return "token_language";
    case ReportAxis::WordVerdict: return "word_verdict";
    case ReportAxis::WordVerdictAll: return "word_verdict_all";
  }
  return "unknown";
}

ReportAxis parse_report_axis(std::string_view name) {
  for (auto a : {ReportAxis::TokenLanguage, ReportAxis::WordVerdict, ReportAxis::WordVerdictAll}) {
    if (to_string(a) == name) return a;
  }
  fail(Errc::InvalidArgument, "unknown report axis '" + std::string(name) + "'");
}

std::string_view to_string(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::Table: return "table";
    case ReportFormat::DelimitedValues: return "csv";
    case ReportFormat::StructuredText: return "json";
  }
  return "unknown";
}

ReportFormat parse_report_format(std::string_view name) {
  for (auto f : {ReportFormat::Table, ReportFormat::DelimitedValues, ReportFormat::StructuredText}) {
    if (to_string(f) == name) return f;
  }
  fail(Errc::ConfigError, "unknown report format '" + std::string(name) + "'");
}

DistributionReport make_report(std::string corpus_id, ReportAxis axis,
                               const std::map<std::string, std::size_t>& counts,
                               std::size_t excluded) {
  DistributionReport r;
  r.corpus_id = std::move(corpus_id);
  r.axis = axis;
  r.excluded = excluded;
  for (const auto& [label, count] : counts) {
    if (count == 0) continue;
    r.total += count;
    r.buckets.push_back({label, count, 0.0});
  }
  for (auto& b : r.buckets) {
    b.fraction = static_cast<double>(b.count) / static_cast<double>(r.total);
  }
  std::stable_sort(r.buckets.begin(), r.buckets.end(),
                   [](const Bucket& a, const Bucket& b) { return a.count > b.count; });
  if (axis == ReportAxis::WordVerdict && r.total + r.excluded > 0) {
    r.decipherable_fraction =
        static_cast<double>(r.total) / static_cast<double>(r.total + r.excluded);
  }
  return r;
}

DistributionReport token_language_distribution(std::string corpus_id,
                                               std::span<const NeighborAssignment> assignments) {
  std::map<std::string, std::size_t> counts;
  std::size_t sentinels = 0;
  for (const auto& a : assignments) {
    if (!a.has_neighbor()) {
      ++sentinels;
      continue;
    }
    ++counts[a.language && !a.language->empty() ? *a.language : std::string(kUndetermined)];
  }
  if (counts.empty()) fail(Errc::NoAssignments, "no frame has a nearest token");
  return make_report(std::move(corpus_id), ReportAxis::TokenLanguage, counts, sentinels);
}

DistributionReport verdict_distribution(std::string corpus_id,
                                        std::span<const WordVerdict> verdicts) {
  if (verdicts.empty()) fail(Errc::EmptyInput, "no words to aggregate");
  std::map<std::string, std::size_t> counts;
  std::size_t unclear = 0;
  for (const auto& v : verdicts) {
    if (v.verdict == Verdict::Unclear) {
      ++unclear;
    } else {
      ++counts[std::string(to_string(v.verdict))];
    }
  }
  if (counts.empty()) fail(Errc::NoDecipherableWords, "every word is unclear");
  return make_report(std::move(corpus_id), ReportAxis::WordVerdict, counts, unclear);
}

DistributionReport verdict_distribution_all(std::string corpus_id,
                                            std::span<const WordVerdict> verdicts) {
  if (verdicts.empty()) fail(Errc::EmptyInput, "no words to aggregate");
  std::map<std::string, std::size_t> counts;
  for (const auto& v : verdicts) ++counts[std::string(to_string(v.verdict))];
  return make_report(std::move(corpus_id), ReportAxis::WordVerdictAll, counts);
}

DistributionReport merge(const DistributionReport& a, const DistributionReport& b,
                         std::string corpus_id) {
  if (a.axis != b.axis) fail(Errc::InvalidArgument, "cannot merge reports of different axes");
  auto counts = counts_of(a);
  for (const auto& [label, count] : counts_of(b)) counts[label] += count;
  return make_report(std::move(corpus_id), a.axis, counts, a.excluded + b.excluded);
}

std::string render(const DistributionReport& report, ReportFormat format) {
  return render(std::span<const DistributionReport>(&report, 1), format);
}

std::string render(std::span<const DistributionReport> reports, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::Table:
      for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0) out += "\n";
        render_table(reports[i], out);
      }
      break;
    case ReportFormat::DelimitedValues:
      out += kCsvHeader;
      for (const auto& r : reports) render_csv_rows(r, out);
      break;
    case ReportFormat::StructuredText: {
      if (reports.size() == 1) return io::dump_json(to_json(reports.front()));
      json all = json::array();
      for (const auto& r : reports) all.push_back(to_json(r));
      return io::dump_json(all);
    }
  }
  return out;
}

void emit(const DistributionReport& report, ReportFormat format,
          const std::filesystem::path& path) {
  io::write_file_atomic(path, render(report, format));
}

json to_json(const DistributionReport& r) {
  json buckets = json::array();
  for (const auto& b : r.buckets) {
    buckets.push_back({{"label", b.label}, {"count", b.count}, {"fraction", b.fraction}});
  }
  json out{{"corpus_id", r.corpus_id},
           {"axis", std::string(to_string(r.axis))},
           {"buckets", buckets},
           {"total", r.total},
           {"excluded", r.excluded}};
  if (r.decipherable_fraction) out["decipherable_fraction"] = *r.decipherable_fraction;
  return out;
}

DistributionReport distribution_report_from_json(const json& value) {
  try {
    DistributionReport r;
    r.corpus_id = value.at("corpus_id").get<std::string>();
    r.axis = parse_report_axis(value.at("axis").get<std::string>());
    for (const auto& b : value.at("buckets")) {
      r.buckets.push_back({b.at("label").get<std::string>(), b.at("count").get<std::size_t>(),
                           b.at("fraction").get<double>()});
    }
    r.total = value.at("total").get<std::size_t>();
    r.excluded = value.at("excluded").get<std::size_t>();
    if (value.contains("decipherable_fraction")) {
      r.decipherable_fraction = value["decipherable_fraction"].get<double>();
    }
    return r;
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("malformed report: ") + e.what());
  }
}

}  // namespace malens
