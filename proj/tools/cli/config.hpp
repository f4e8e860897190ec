#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "malens/asr_eval.hpp"
#include "malens/interchange.hpp"
#include "malens/probes.hpp"
#include "malens/providers.hpp"
#include "malens/report.hpp"
#include "malens/verdict.hpp"

namespace malens::cli {

enum class BackendKind { Fixture, Http, Command };

/// "fixture", "http" or "command"; ConfigError otherwise.
BackendKind parse_backend_kind(std::string_view name);

struct ProviderSettings {
  BackendKind backend = BackendKind::Fixture;
  std::filesystem::path fixture_dir;
  /// Persistent response cache for the http and command backends.
  std::filesystem::path cache_dir;
  std::map<Capability, std::string> http_urls;
  std::string command;
  std::vector<std::string> command_args;
  /// When set, g2p requests go to the table backend loaded from here.
  std::filesystem::path g2p_tables;
  std::size_t max_inflight = 8;
  RetryPolicy retry;
};

struct ProbeSettings {
  /// Empty: every stage the first utterance provides.
  std::vector<Stage> stages;
  std::vector<ProbeLevel> levels{ProbeLevel::Phone, ProbeLevel::Word};
  ProbeTrainingOptions training;
  ProbeSplitOptions split;
};

struct WerSettings {
  std::filesystem::path hypotheses;
  WerSchemeMap schemes;
  bool casefold = true;
};

struct CalibrateSettings {
  std::filesystem::path pairs;
  std::string language = "en";
  double high_cutoff = 7.0;
};

struct ReportSettings {
  std::vector<ReportFormat> formats{ReportFormat::DelimitedValues};
  /// Output directories of earlier verdict runs.
  std::vector<std::filesystem::path> inputs;
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir = "malens-out";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  Stage stage = Stage::AdapterOutput;
  bool force = false;
  bool dry_run = false;

  ProviderSettings providers;
  VerdictConfig verdict;
  std::filesystem::path embedding_space;
  ProbeSettings probe;
  std::filesystem::path sts_pairs;
  WerSettings wer;
  CalibrateSettings calibrate;
  ReportSettings report;
};

/// Relative paths resolve against `base`. ConfigError on unknown keys, wrong
/// types or out-of-range values; credentials are not accepted here.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base);
RunConfig load_run_config(const std::filesystem::path& path);

/// Builds the capability routes the configuration describes.
Providers make_providers(const RunConfig& config);

}  // namespace malens::cli
