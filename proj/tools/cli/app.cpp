#include "app.hpp"

#include <functional>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "commands.hpp"
#include "malens/error.hpp"
#include "malens/log.hpp"

namespace malens::cli {

namespace fs = std::filesystem;

namespace {

/// Command-line values; only options actually given override the config file.
struct Flags {
  std::string config;
  std::string corpus;
  std::string output;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool force = false;
  bool dry_run = false;
  bool quiet = false;
  std::string stage;
  std::string backend;
  std::string fixtures;
  std::string cache_dir;
  std::string g2p_tables;
  std::vector<std::string> formats;

  std::string space;
  std::string steps;
  double threshold = 0.0;
  double ratio = 0.0;
  bool strict_ratio = false;
  std::string normalization;

  std::size_t epochs = 0;
  double learning_rate = 0.0;
  std::vector<std::string> levels;

  std::string pairs;
  std::string hypotheses;
  std::string scheme;
  double cutoff = 0.0;
  std::vector<std::string> inputs;

  std::map<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    const auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }
};

template <typename T>
CLI::Option* option(CLI::App* app, Flags& f, const std::string& name, T& target,
                    const std::string& help) {
  return f.given[name] = app->add_option("--" + name, target, help);
}

void flag(CLI::App* app, Flags& f, const std::string& name, bool& target, const std::string& help) {
  f.given[name] = app->add_flag("--" + name, target, help);
}

void add_common(CLI::App* app, Flags& f) {
  option(app, f, "config", f.config, "Run configuration (JSON)");
  option(app, f, "output", f.output, "Output directory");
  option(app, f, "jobs", f.jobs, "Worker threads (0: all cores)");
  flag(app, f, "force", f.force, "Overwrite earlier results");
  flag(app, f, "dry-run", f.dry_run, "Validate inputs without provider calls or writes");
  flag(app, f, "quiet", f.quiet, "Log warnings and errors only");
}

void add_corpus(CLI::App* app, Flags& f) {
  option(app, f, "corpus", f.corpus, "Corpus manifest");
  option(app, f, "stage", f.stage, "Representation stage (encoder_output, adapter_output)");
}

void add_providers(CLI::App* app, Flags& f) {
  option(app, f, "backend", f.backend, "Provider backend (fixture, http, command)");
  option(app, f, "fixtures", f.fixtures, "Frozen provider responses");
  option(app, f, "cache-dir", f.cache_dir, "Persistent provider response cache");
  option(app, f, "g2p-tables", f.g2p_tables, "Grapheme-to-phoneme rule tables");
}

void add_formats(CLI::App* app, Flags& f) {
  option(app, f, "format", f.formats, "Report formats (table, csv, json)");
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.has("config") ? load_run_config(f.config) : RunConfig{};
  if (f.has("corpus")) c.corpus = f.corpus;
  if (f.has("output")) c.output_dir = f.output;
  if (f.has("seed")) c.seed = f.seed;
  if (f.has("jobs")) c.jobs = f.jobs;
  c.force = f.force;
  c.dry_run = f.dry_run;
  if (f.has("stage")) c.stage = parse_stage(f.stage);
  if (f.has("backend")) c.providers.backend = parse_backend_kind(f.backend);
  if (f.has("fixtures")) c.providers.fixture_dir = f.fixtures;
  if (f.has("cache-dir")) c.providers.cache_dir = f.cache_dir;
  if (f.has("g2p-tables")) c.providers.g2p_tables = f.g2p_tables;
  if (f.has("format")) {
    c.report.formats.clear();
    for (const auto& name : f.formats) c.report.formats.push_back(parse_report_format(name));
  }
  if (f.has("space")) c.embedding_space = f.space;
  if (f.has("steps")) c.verdict.enabled_steps = parse_ladder_steps(f.steps);
  if (f.has("threshold")) c.verdict.semantic_threshold = f.threshold;
  if (f.has("ratio")) c.verdict.phone_match_ratio = f.ratio;
  if (f.has("strict-ratio")) c.verdict.strict_phone_ratio = f.strict_ratio;
  if (f.has("normalization")) c.verdict.normalization = parse_normalization(f.normalization);
  if (f.has("epochs")) c.probe.training.epochs = f.epochs;
  if (f.has("lr")) c.probe.training.learning_rate = f.learning_rate;
  if (f.has("level")) {
    c.probe.levels.clear();
    for (const auto& name : f.levels) c.probe.levels.push_back(parse_probe_level(name));
  }
  if (f.has("pairs")) {
    c.sts_pairs = f.pairs;
    c.calibrate.pairs = f.pairs;
  }
  if (f.has("hypotheses")) c.wer.hypotheses = f.hypotheses;
  if (f.has("scheme")) c.wer.schemes.fallback = parse_wer_scheme(f.scheme);
  if (f.has("cutoff")) c.calibrate.high_cutoff = f.cutoff;
  if (f.has("input")) {
    c.report.inputs.clear();
    for (const auto& i : f.inputs) c.report.inputs.emplace_back(i);
  }
  c.verdict.validate();
  return c;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Input: return kExitInput;
    case ErrorCategory::Provider: return kExitProvider;
    case ErrorCategory::Internal: return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nearest-token analysis of speech-to-LM adapter outputs", "malens"};
  app.require_subcommand(1);

  using Command = void (*)(const RunConfig&, std::ostream&);
  struct Sub {
    CLI::App* app;
    Command command;
    std::unique_ptr<Flags> flags;
  };
  std::vector<Sub> subs;
  auto sub = [&](const std::string& name, const std::string& help, Command command) -> Flags& {
    auto flags = std::make_unique<Flags>();
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, *flags);
    subs.push_back({s, command, std::move(flags)});
    return *subs.back().flags;
  };

  {
    Flags& f = sub("neighbors", "Nearest vocabulary token of every frame", cmd_neighbors);
    add_corpus(subs.back().app, f);
  }
  {
    Flags& f = sub("verdicts", "Token languages and per-word verdicts", cmd_verdicts);
    CLI::App* s = subs.back().app;
    add_corpus(s, f);
    add_providers(s, f);
    add_formats(s, f);
    option(s, f, "space", f.space, "Multilingual embedding space manifest");
    option(s, f, "steps", f.steps, "Enabled ladder steps, e.g. 3a,3b,3c");
    option(s, f, "threshold", f.threshold, "Semantic similarity threshold");
    option(s, f, "ratio", f.ratio, "Phone match ratio");
    flag(s, f, "strict-ratio", f.strict_ratio, "Require the phone ratio to be exceeded");
    option(s, f, "normalization", f.normalization,
           "Token comparison (exact, casefold, casefold_strip_marks)");
  }
  {
    Flags& f = sub("probe", "Linear phone and word probes", cmd_probe);
    CLI::App* s = subs.back().app;
    add_corpus(s, f);
    option(s, f, "seed", f.seed, "Split and training seed");
    option(s, f, "epochs", f.epochs, "Training epochs");
    option(s, f, "lr", f.learning_rate, "Learning rate");
    option(s, f, "level", f.levels, "Probe levels (phone, word)");
  }
  {
    Flags& f = sub("sts", "Spearman correlation on spoken sentence pairs", cmd_sts);
    CLI::App* s = subs.back().app;
    option(s, f, "stage", f.stage, "Representation stage");
    option(s, f, "pairs", f.pairs, "Sentence pair list (JSON)");
  }
  {
    Flags& f = sub("wer", "Word error rate and language-match rate", cmd_wer);
    CLI::App* s = subs.back().app;
    add_corpus(s, f);
    add_providers(s, f);
    option(s, f, "hypotheses", f.hypotheses, "Hypothesis set (JSON)");
    option(s, f, "scheme", f.scheme, "Tokenization (whitespace, char)");
  }
  {
    Flags& f = sub("report", "Merge reports of earlier verdict runs", cmd_report);
    CLI::App* s = subs.back().app;
    add_formats(s, f);
    option(s, f, "input", f.inputs, "Output directory of a verdicts run")->expected(1, -1);
  }
  {
    Flags& f = sub("calibrate", "Fit the semantic threshold to word-similarity data", cmd_calibrate);
    CLI::App* s = subs.back().app;
    option(s, f, "space", f.space, "Multilingual embedding space manifest");
    option(s, f, "pairs", f.pairs, "Word-similarity judgements (TSV)");
    option(s, f, "cutoff", f.cutoff, "Human score counted as similar");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    log::Sink previous;
    if (s.flags->quiet) {
      previous = log::set_sink([&err](log::Level level, std::string_view message) {
        if (level >= log::Level::Warning) err << message << "\n";
      });
    }
    int code = kExitOk;
    try {
      s.command(resolve(*s.flags), out);
    } catch (const Error& e) {
      err << "malens " << s.app->get_name() << ": " << e.what() << "\n";
      code = exit_code(e.category());
    } catch (const std::exception& e) {
      err << "malens " << s.app->get_name() << ": internal error: " << e.what() << "\n";
      code = kExitInternal;
    }
    if (previous) log::set_sink(std::move(previous));
    return code;
  }
  return kExitInput;
}

}  // namespace malens::cli
