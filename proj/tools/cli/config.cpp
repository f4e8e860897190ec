#include "config.hpp"

#include <set>

#include "malens/error.hpp"
#include "malens/io.hpp"

namespace malens::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Reads fields of one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& value, std::string path, const fs::path& base)
      : value_(value), path_(std::move(path)), base_(base) {
    if (!value_.is_object()) fail(Errc::ConfigError, where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return value_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = value_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(Errc::ConfigError, where(key) + " has the wrong type");
    }
  }

  void read_path(const std::string& key, fs::path& out) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = resolve(s);
  }

  fs::path resolve(const std::string& s) const {
    const fs::path p(s);
    return p.is_absolute() ? p : base_ / p;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(value_.at(key), path_ + "." + key, base_);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return value_.at(key);
  }

  std::string where(const std::string& key = {}) const {
    return key.empty() ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, v] : value_.items()) {
      if (!seen_.contains(key)) fail(Errc::ConfigError, "unknown key " + where(key));
    }
  }

 private:
  const json& value_;
  std::string path_;
  const fs::path& base_;
  std::set<std::string> seen_;
};

void read_providers(Section s, ProviderSettings& p) {
  if (s.has("backend")) {
    std::string name;
    s.read("backend", name);
    p.backend = parse_backend_kind(name);
  }
  s.read_path("fixture_dir", p.fixture_dir);
  s.read_path("cache_dir", p.cache_dir);
  s.read_path("g2p_tables", p.g2p_tables);
  s.read("max_inflight", p.max_inflight);
  if (s.has("http")) {
    Section h = s.child("http");
    for (auto c : {Capability::LangId, Capability::Translate, Capability::WordAlign,
                   Capability::Phonetize}) {
      std::string url;
      h.read(std::string(to_string(c)) + "_url", url);
      if (!url.empty()) p.http_urls[c] = url;
    }
    h.finish();
  }
  if (s.has("command")) {
    Section c = s.child("command");
    c.read("executable", p.command);
    c.read("args", p.command_args);
    c.finish();
  }
  if (s.has("retry")) {
    Section r = s.child("retry");
    r.read("attempts", p.retry.attempts);
    std::int64_t backoff = p.retry.initial_backoff.count();
    r.read("initial_backoff_ms", backoff);
    p.retry.initial_backoff = std::chrono::milliseconds(backoff);
    r.read("multiplier", p.retry.multiplier);
    r.finish();
  }
  s.finish();
  if (p.max_inflight == 0) fail(Errc::ConfigError, "providers.max_inflight must be positive");
  if (p.retry.attempts < 1) fail(Errc::ConfigError, "providers.retry.attempts must be positive");
}

void read_verdict(Section s, RunConfig& config) {
  VerdictConfig& v = config.verdict;
  s.read("semantic_threshold", v.semantic_threshold);
  s.read("phone_match_ratio", v.phone_match_ratio);
  s.read("strict_phone_ratio", v.strict_phone_ratio);
  s.read("top_k_languages", v.top_k_languages);
  if (s.has("normalization")) {
    std::string name;
    s.read("normalization", name);
    v.normalization = parse_normalization(name);
  }
  if (s.has("steps")) {
    std::vector<std::string> steps;
    s.read("steps", steps);
    v.enabled_steps.reset();
    for (const auto& step : steps) v.enabled_steps.set(static_cast<std::size_t>(parse_ladder_step(step)));
  }
  s.read_path("embedding_space", config.embedding_space);
  s.finish();
}

void read_probe(Section s, ProbeSettings& p) {
  if (s.has("stages")) {
    std::vector<std::string> names;
    s.read("stages", names);
    p.stages.clear();
    for (const auto& n : names) p.stages.push_back(parse_stage(n));
  }
  if (s.has("levels")) {
    std::vector<std::string> names;
    s.read("levels", names);
    p.levels.clear();
    for (const auto& n : names) p.levels.push_back(parse_probe_level(n));
  }
  s.read("epochs", p.training.epochs);
  s.read("learning_rate", p.training.learning_rate);
  s.read("l2", p.training.l2);
  s.read("batch_size", p.training.batch_size);
  s.read("min_label_count", p.split.min_label_count);
  s.read("train_fraction", p.split.train_fraction);
  s.finish();
}

void read_wer(Section s, WerSettings& w) {
  s.read_path("hypotheses", w.hypotheses);
  if (s.has("scheme")) {
    std::string name;
    s.read("scheme", name);
    w.schemes.fallback = parse_wer_scheme(name);
  }
  if (s.has("overrides")) {
    std::map<std::string, std::string> overrides;
    s.read("overrides", overrides);
    for (const auto& [lang, name] : overrides) w.schemes.overrides[lang] = parse_wer_scheme(name);
  }
  s.read("casefold", w.casefold);
  s.finish();
}

void read_calibrate(Section s, CalibrateSettings& c) {
  s.read_path("pairs", c.pairs);
  s.read("language", c.language);
  s.read("high_cutoff", c.high_cutoff);
  s.finish();
}

void read_report(Section s, ReportSettings& r) {
  if (s.has("formats")) {
    std::vector<std::string> names;
    s.read("formats", names);
    r.formats.clear();
    for (const auto& n : names) r.formats.push_back(parse_report_format(n));
  }
  if (s.has("inputs")) {
    std::vector<std::string> inputs;
    s.read("inputs", inputs);
    for (const auto& i : inputs) r.inputs.push_back(s.resolve(i));
  }
  s.finish();
}

}  // namespace

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "fixture") return BackendKind::Fixture;
  if (name == "http") return BackendKind::Http;
  if (name == "command") return BackendKind::Command;
  fail(Errc::ConfigError, "unknown provider backend '" + std::string(name) +
                              "': expected fixture, http or command");
}

RunConfig config_from_json(const json& doc, const fs::path& base) {
  RunConfig config;
  Section root(doc, "config", base);
  root.read_path("corpus", config.corpus);
  root.read_path("output_dir", config.output_dir);
  root.read("seed", config.seed);
  root.read("jobs", config.jobs);
  if (root.has("stage")) {
    std::string name;
    root.read("stage", name);
    config.stage = parse_stage(name);
  }
  if (root.has("providers")) read_providers(root.child("providers"), config.providers);
  if (root.has("verdict")) read_verdict(root.child("verdict"), config);
  if (root.has("probe")) read_probe(root.child("probe"), config.probe);
  root.read_path("sts_pairs", config.sts_pairs);
  if (root.has("wer")) read_wer(root.child("wer"), config.wer);
  if (root.has("calibrate")) read_calibrate(root.child("calibrate"), config.calibrate);
  if (root.has("report")) read_report(root.child("report"), config.report);
  root.finish();
  config.verdict.validate();
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  json doc;
  try {
    doc = io::read_json_file(path);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument) fail(Errc::ConfigError, e.detail());
    throw;
  }
  return config_from_json(doc, path.parent_path());
}

Providers make_providers(const RunConfig& config) {
  const ProviderSettings& p = config.providers;
  std::shared_ptr<ProviderBackend> backend;
  switch (p.backend) {
    case BackendKind::Fixture:
      if (p.fixture_dir.empty()) fail(Errc::ConfigError, "providers.fixture_dir is not set");
      if (!fs::is_directory(p.fixture_dir)) {
        fail(Errc::MissingFile, "fixture directory " + p.fixture_dir.string());
      }
      backend = std::make_shared<FixtureBackend>(p.fixture_dir);
      break;
    case BackendKind::Http: {
      std::map<Capability, HttpEndpoint> endpoints;
      for (const auto& [c, url] : p.http_urls) endpoints[c].url = url;
      backend = std::make_shared<HttpBackend>(HttpBackend::endpoints_from_environment(endpoints),
                                              p.retry, p.max_inflight);
      break;
    }
    case BackendKind::Command:
      if (p.command.empty()) fail(Errc::ConfigError, "providers.command.executable is not set");
      backend = std::make_shared<CommandBackend>(p.command, p.command_args, p.retry);
      break;
  }
  if (p.backend != BackendKind::Fixture && !p.cache_dir.empty()) {
    backend = std::make_shared<CachedBackend>(backend, p.cache_dir);
  }
  Providers providers;
  providers.route_all(backend);
  if (!p.g2p_tables.empty()) {
    providers.route(Capability::Phonetize, std::make_shared<TableG2PBackend>(p.g2p_tables));
  }
  return providers;
}

}  // namespace malens::cli
