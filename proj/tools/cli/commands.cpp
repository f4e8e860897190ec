#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <sstream>

#include "malens/error.hpp"
#include "malens/io.hpp"
#include "malens/log.hpp"
#include "malens/neighbor.hpp"

namespace malens::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double value, int precision) {
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::fixed, precision);
  return std::string(buffer, result.ptr);
}

std::string extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return "txt";
    case ReportFormat::DelimitedValues: return "csv";
    case ReportFormat::StructuredText: return "json";
  }
  return "txt";
}

bool occupied(const fs::path& path) {
  if (fs::is_directory(path)) return !fs::is_empty(path);
  return fs::exists(path);
}

/// Refuses to overwrite earlier results unless forced; forced runs clear the
/// listed per-utterance directories so no stale files survive.
void guard_outputs(const RunConfig& config, const std::vector<fs::path>& files,
                   const std::vector<fs::path>& directories = {}) {
  for (const auto& group : {files, directories}) {
    for (const auto& p : group) {
      if (occupied(p) && !config.force) {
        fail(Errc::InvalidArgument, p.string() + " already exists; pass --force to overwrite");
      }
    }
  }
  if (config.dry_run) return;
  for (const auto& d : directories) {
    std::error_code ec;
    fs::remove_all(d, ec);
    if (ec) fail(Errc::IoFailure, "cannot clear " + d.string() + ": " + ec.message());
  }
}

Corpus require_corpus(const RunConfig& config) {
  if (config.corpus.empty()) fail(Errc::ConfigError, "no corpus manifest; pass --corpus");
  return load_corpus(config.corpus);
}

void check_sequences(const Corpus& corpus, Stage stage, std::size_t dim) {
  for (const auto& entry : corpus.manifest().entries) {
    const auto it = entry.sequence_paths.find(stage);
    if (it == entry.sequence_paths.end()) {
      fail(Errc::MissingFile, "utterance '" + entry.utterance_id + "' has no " +
                                  std::string(to_string(stage)) + " sequence");
    }
    const TensorHeader header = read_tensor_header(it->second);
    if (header.kind != TensorKind::Sequence) {
      fail(Errc::ShapeMismatch, it->second.string() + " is not a sequence");
    }
    if (dim != 0 && header.dim != dim) {
      fail(Errc::DimMismatch, it->second.string() + ": dim " + std::to_string(header.dim) +
                                  ", embedding matrix dim " + std::to_string(dim));
    }
  }
}

fs::path assignment_path(const RunConfig& config, const std::string& utterance_id) {
  return config.output_dir / "assignments" / (utterance_id + ".json");
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string csv_line(std::initializer_list<std::string> fields) {
  std::string line;
  for (const auto& f : fields) {
    if (!line.empty()) line += ',';
    line += csv_field(f);
  }
  return line + "\n";
}

MultilingualEmbeddingSpace load_space(const RunConfig& config) {
  if (config.embedding_space.empty()) {
    fail(Errc::ConfigError, "no multilingual embedding space; pass --space");
  }
  return MultilingualEmbeddingSpace::load(config.embedding_space);
}

}  // namespace

void cmd_neighbors(const RunConfig& config, std::ostream& out) {
  using Clock = std::chrono::steady_clock;
  const Corpus corpus = require_corpus(config);
  const TensorHeader matrix_header = read_tensor_header(corpus.manifest().embedding_matrix_path);
  if (matrix_header.kind != TensorKind::Matrix) {
    fail(Errc::ShapeMismatch,
         corpus.manifest().embedding_matrix_path.string() + " is not an embedding matrix");
  }
  check_sequences(corpus, config.stage, matrix_header.dim);
  const fs::path log_path = config.output_dir / "neighbors.log.json";
  guard_outputs(config, {log_path}, {config.output_dir / "assignments"});
  if (config.dry_run) {
    out << "dry run: " << corpus.size() << " utterances ready for neighbor search\n";
    return;
  }

  const auto started = Clock::now();
  const EmbeddingMatrix matrix = corpus.embedding_matrix();
  const NeighborSearch search(matrix);
  json utterances = json::array();
  std::size_t total_frames = 0;
  std::size_t total_sentinels = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto t0 = Clock::now();
    const RepresentationSequence sequence = corpus.sequence(i, config.stage);
    AssignmentFile file{sequence.utterance_id(), assign_neighbors(sequence, search, config.jobs)};
    const auto sentinels = static_cast<std::size_t>(std::count_if(
        file.frames.begin(), file.frames.end(), [](const auto& a) { return !a.has_neighbor(); }));
    write_assignments(assignment_path(config, file.utterance_id), file);
    const auto elapsed = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    utterances.push_back({{"utterance_id", file.utterance_id},
                          {"frames", file.frames.size()},
                          {"sentinels", sentinels},
                          {"elapsed_ms", elapsed}});
    total_frames += file.frames.size();
    total_sentinels += sentinels;
    if (sentinels > 0) {
      log::warn(file.utterance_id + ": " + std::to_string(sentinels) +
                " frames equal the embedding mean and have no neighbor");
    }
  }
  const auto elapsed = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  const json log_doc = {{"corpus_id", corpus.manifest().corpus_id},
                        {"stage", to_string(config.stage)},
                        {"vocab_size", matrix.vocab_size()},
                        {"dim", matrix.dim()},
                        {"jobs", config.jobs},
                        {"frames", total_frames},
                        {"sentinels", total_sentinels},
                        {"elapsed_ms", elapsed},
                        {"utterances", utterances}};
  io::write_file_atomic(log_path, io::dump_json(log_doc));
  out << corpus.size() << " utterances, " << total_frames << " frames, " << total_sentinels
      << " without neighbor\n";
}

void cmd_verdicts(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = require_corpus(config);
  const std::string& corpus_id = corpus.manifest().corpus_id;
  const VerdictConfig& vc = config.verdict;
  vc.validate();

  std::vector<fs::path> files{config.output_dir / "verdicts.jsonl", config.output_dir / "run.json"};
  for (auto axis : {ReportAxis::TokenLanguage, ReportAxis::WordVerdict, ReportAxis::WordVerdictAll}) {
    for (auto format : config.report.formats) {
      files.push_back(config.output_dir /
                      ("report_" + std::string(to_string(axis)) + "." + extension(format)));
    }
  }

  // Validate everything that can be checked without a provider call.
  std::vector<UtteranceRecord> records;
  records.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) records.push_back(corpus.record(i));
  const TensorHeader matrix_header = read_tensor_header(corpus.manifest().embedding_matrix_path);
  check_sequences(corpus, config.stage, matrix_header.dim);
  const bool needs_space = vc.enabled(LadderStep::Semantic);
  const MultilingualEmbeddingSpace space =
      needs_space ? load_space(config) : MultilingualEmbeddingSpace(1);
  guard_outputs(config, files, {config.output_dir / "tagged"});
  if (config.dry_run) {
    if (config.providers.backend == BackendKind::Fixture &&
        !fs::is_directory(config.providers.fixture_dir)) {
      fail(Errc::MissingFile, "fixture directory " + config.providers.fixture_dir.string());
    }
    out << "dry run: " << records.size() << " utterances ready for classification\n";
    return;
  }
  const Providers providers = make_providers(config);
  if (vc.enabled(LadderStep::Transliteration) && !providers.has_route(Capability::Phonetize)) {
    fail(Errc::ConfigError, "step 3d needs a g2p provider");
  }

  // Step 1: reuse earlier assignments when present.
  std::vector<RepresentationSequence> sequences;
  std::vector<std::vector<NeighborAssignment>> assignments(corpus.size());
  std::optional<EmbeddingMatrix> matrix;
  std::optional<NeighborSearch> search;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    sequences.push_back(corpus.sequence(i, config.stage));
    const fs::path path = assignment_path(config, records[i].utterance_id);
    if (fs::exists(path)) {
      AssignmentFile file = read_assignments(path);
      if (file.utterance_id != records[i].utterance_id) {
        fail(Errc::UtteranceMismatch, path.string() + " belongs to '" + file.utterance_id + "'");
      }
      assignments[i] = std::move(file.frames);
    } else {
      if (!search) {
        matrix.emplace(corpus.embedding_matrix());
        search.emplace(*matrix);
      }
      assignments[i] = assign_neighbors(sequences[i], *search, config.jobs);
    }
  }

  // Step 2: token languages over the whole corpus, then the top languages.
  std::vector<NeighborAssignment> pooled;
  for (const auto& a : assignments) pooled.insert(pooled.end(), a.begin(), a.end());
  identify_token_languages(pooled, providers, config.jobs);
  {
    std::size_t offset = 0;
    for (auto& a : assignments) {
      std::copy_n(pooled.begin() + static_cast<std::ptrdiff_t>(offset), a.size(), a.begin());
      offset += a.size();
    }
  }
  const std::vector<std::string> languages = top_languages(pooled, vc.top_k_languages);

  // Step 3.
  std::vector<WordVerdict> verdicts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ensure_translations(records[i], languages, providers);
    auto words = classify_utterance(records[i], sequences[i], assignments[i], languages, vc, space,
                                    providers, config.jobs);
    verdicts.insert(verdicts.end(), std::make_move_iterator(words.begin()),
                    std::make_move_iterator(words.end()));
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    write_assignments(config.output_dir / "tagged" / (records[i].utterance_id + ".json"),
                      AssignmentFile{records[i].utterance_id, assignments[i]});
  }
  write_verdicts(config.output_dir / "verdicts.jsonl", verdicts);

  std::vector<DistributionReport> reports;
  reports.push_back(token_language_distribution(corpus_id, pooled));
  try {
    reports.push_back(verdict_distribution(corpus_id, verdicts));
  } catch (const Error& e) {
    if (e.code() != Errc::NoDecipherableWords && e.code() != Errc::EmptyInput) throw;
    log::warn(corpus_id + ": " + e.detail());
  }
  if (!verdicts.empty()) reports.push_back(verdict_distribution_all(corpus_id, verdicts));
  for (const auto& report : reports) {
    for (auto format : config.report.formats) {
      emit(report, format,
           config.output_dir /
               ("report_" + std::string(to_string(report.axis)) + "." + extension(format)));
    }
  }

  json steps = json::array();
  for (std::size_t s = 0; s < kLadderSteps; ++s) {
    if (vc.enabled_steps.test(s)) steps.push_back(to_string(static_cast<LadderStep>(s)));
  }
  const json run = {{"corpus_id", corpus_id},
                    {"model_id", corpus.manifest().model_id},
                    {"language", corpus.language()},
                    {"stage", to_string(config.stage)},
                    {"utterances", records.size()},
                    {"words", verdicts.size()},
                    {"top_languages", languages},
                    {"steps", steps},
                    {"semantic_threshold", vc.semantic_threshold},
                    {"phone_match_ratio", vc.phone_match_ratio},
                    {"strict_phone_ratio", vc.strict_phone_ratio},
                    {"normalization", to_string(vc.normalization)}};
  io::write_file_atomic(config.output_dir / "run.json", io::dump_json(run));

  out << render(reports, ReportFormat::Table);
}

void cmd_probe(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = require_corpus(config);
  if (corpus.size() == 0) fail(Errc::NoExamples, "corpus has no utterances");
  std::vector<Stage> stages = config.probe.stages;
  if (stages.empty()) {
    for (auto s : {Stage::EncoderOutput, Stage::AdapterOutput}) {
      if (corpus.has_stage(0, s)) stages.push_back(s);
    }
  }
  for (auto s : stages) check_sequences(corpus, s, 0);
  const fs::path path = config.output_dir / "probe.csv";
  guard_outputs(config, {path});
  if (config.dry_run) {
    out << "dry run: " << stages.size() * config.probe.levels.size() << " probes ready\n";
    return;
  }

  std::string csv = csv_line({"corpus_id", "stage", "level", "examples", "labels",
                              "train_accuracy", "test_accuracy", "final_loss"});
  ProbeSplitOptions split = config.probe.split;
  split.seed = config.seed;
  ProbeTrainingOptions training = config.probe.training;
  training.seed = config.seed;
  for (auto stage : stages) {
    for (auto level : config.probe.levels) {
      const ProbeDataset ds = build_probe_dataset(corpus, stage, level, split, config.jobs);
      const ProbeModel model = train_linear_probe(ds, training);
      const double train_acc = evaluate_probe(model, ds, Split::Train, config.jobs);
      const double test_acc = evaluate_probe(model, ds, Split::Test, config.jobs);
      csv += csv_line({corpus.manifest().corpus_id, std::string(to_string(stage)),
                       std::string(to_string(level)), std::to_string(ds.examples.size()),
                       std::to_string(ds.label_set.size()), fixed(train_acc, 4),
                       fixed(test_acc, 4), fixed(model.final_loss(), 6)});
    }
  }
  io::write_file_atomic(path, csv);
  out << csv;
}

void cmd_sts(const RunConfig& config, std::ostream& out) {
  if (config.sts_pairs.empty()) fail(Errc::ConfigError, "no sentence pairs; pass --pairs");
  const std::vector<StsPair> pairs = load_sts_pairs(config.sts_pairs);
  const fs::path path = config.output_dir / "sts.csv";
  guard_outputs(config, {path});
  if (config.dry_run) {
    out << "dry run: " << pairs.size() << " sentence pairs\n";
    return;
  }
  const StsResult result = sts_eval(pairs, config.stage);
  const std::string csv =
      csv_line({"stage", "pairs", "spearman"}) +
      csv_line({std::string(to_string(config.stage)), std::to_string(result.num_pairs),
                fixed(result.rho, 6)});
  io::write_file_atomic(path, csv);
  out << csv;
}

void cmd_wer(const RunConfig& config, std::ostream& out) {
  const Corpus corpus = require_corpus(config);
  if (config.wer.hypotheses.empty()) fail(Errc::ConfigError, "no hypotheses; pass --hypotheses");
  const HypothesisSet hypotheses = load_hypotheses(config.wer.hypotheses);
  std::map<std::string, std::string> references;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const UtteranceRecord record = corpus.record(i);
    references[record.utterance_id] = transcript_sentence(record);
  }
  const fs::path path = config.output_dir / "wer.csv";
  guard_outputs(config, {path});
  const WerScheme scheme = config.wer.schemes.scheme_for(corpus.language());
  const CorpusWer scored =
      score_hypotheses(references, hypotheses, scheme, config.wer.casefold, config.jobs);
  if (config.dry_run) {
    out << "dry run: " << scored.utterances << " hypotheses match the corpus\n";
    return;
  }
  const Providers providers = make_providers(config);
  const double lang = lang_match_rate(hypotheses, corpus.language(), providers, config.jobs);
  const std::string csv =
      csv_line({"corpus_id", "model_id", "language", "scheme", "utterances", "substitutions",
                "deletions", "insertions", "reference_length", "wer_percent", "lang_percent"}) +
      csv_line({corpus.manifest().corpus_id, hypotheses.model_id, corpus.language(),
                std::string(to_string(scheme)), std::to_string(scored.utterances),
                std::to_string(scored.edits.substitutions), std::to_string(scored.edits.deletions),
                std::to_string(scored.edits.insertions),
                std::to_string(scored.edits.reference_length), fixed(scored.wer_percent(), 2),
                fixed(lang, 2)});
  io::write_file_atomic(path, csv);
  out << csv;
}

void cmd_report(const RunConfig& config, std::ostream& out) {
  if (config.report.inputs.empty()) fail(Errc::ConfigError, "no verdict runs; pass --input");
  struct Run {
    std::string corpus_id;
    std::vector<NeighborAssignment> frames;
    std::vector<WordVerdict> verdicts;
  };
  std::vector<Run> runs;
  for (const auto& dir : config.report.inputs) {
    Run run;
    run.corpus_id = io::read_json_file(dir / "run.json").at("corpus_id").get<std::string>();
    run.verdicts = read_verdicts(dir / "verdicts.jsonl");
    const fs::path tagged = dir / "tagged";
    if (!fs::is_directory(tagged)) fail(Errc::MissingFile, tagged.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(tagged)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto file = read_assignments(f);
      run.frames.insert(run.frames.end(), file.frames.begin(), file.frames.end());
    }
    runs.push_back(std::move(run));
  }
  std::vector<fs::path> outputs;
  for (auto format : config.report.formats) {
    outputs.push_back(config.output_dir / ("report." + extension(format)));
  }
  guard_outputs(config, outputs);
  if (config.dry_run) {
    out << "dry run: " << runs.size() << " verdict runs\n";
    return;
  }

  std::string merged_id;
  std::vector<NeighborAssignment> all_frames;
  std::vector<WordVerdict> all_verdicts;
  for (const auto& run : runs) {
    merged_id += (merged_id.empty() ? "" : "+") + run.corpus_id;
    all_frames.insert(all_frames.end(), run.frames.begin(), run.frames.end());
    all_verdicts.insert(all_verdicts.end(), run.verdicts.begin(), run.verdicts.end());
  }
  std::vector<DistributionReport> reports;
  auto add = [&](const std::string& id, const std::vector<NeighborAssignment>& frames,
                 const std::vector<WordVerdict>& verdicts) {
    reports.push_back(token_language_distribution(id, frames));
    try {
      reports.push_back(verdict_distribution(id, verdicts));
    } catch (const Error& e) {
      if (e.code() != Errc::NoDecipherableWords) throw;
      log::warn(id + ": " + e.detail());
    }
    reports.push_back(verdict_distribution_all(id, verdicts));
  };
  for (const auto& run : runs) add(run.corpus_id, run.frames, run.verdicts);
  if (runs.size() > 1) add(merged_id, all_frames, all_verdicts);

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    io::write_file_atomic(outputs[i], render(reports, config.report.formats[i]));
  }
  out << render(reports, ReportFormat::Table);
}

void cmd_calibrate(const RunConfig& config, std::ostream& out) {
  if (config.calibrate.pairs.empty()) fail(Errc::ConfigError, "no judgements; pass --pairs");
  const auto judgements = load_similarity_judgements(config.calibrate.pairs);
  const MultilingualEmbeddingSpace space = load_space(config);
  const fs::path path = config.output_dir / "calibration.json";
  guard_outputs(config, {path});
  if (config.dry_run) {
    out << "dry run: " << judgements.size() << " judgements\n";
    return;
  }
  const double threshold = calibrate_threshold(judgements, space, config.calibrate.language,
                                               config.calibrate.high_cutoff);
  const json doc = {{"language", config.calibrate.language},
                    {"high_cutoff", config.calibrate.high_cutoff},
                    {"judgements", judgements.size()},
                    {"semantic_threshold", threshold}};
  io::write_file_atomic(path, io::dump_json(doc));
  out << "semantic_threshold " << fixed(threshold, 4) << "\n";
}

}  // namespace malens::cli
