#pragma once

#include <ostream>

#include "config.hpp"

namespace malens::cli {

// Each command reads its inputs, writes under config.output_dir and prints a
// short summary to `out`. Failures are thrown as malens::Error.

/// assignments/<utterance>.json per utterance plus neighbors.log.json.
void cmd_neighbors(const RunConfig& config, std::ostream& out);

/// verdicts.jsonl, tagged/<utterance>.json, run.json and one file per report
/// axis and format. Assignments from an earlier neighbors run are reused.
void cmd_verdicts(const RunConfig& config, std::ostream& out);

/// probe.csv: one row per stage and level.
void cmd_probe(const RunConfig& config, std::ostream& out);

/// sts.csv: Spearman correlation for the configured stage.
void cmd_sts(const RunConfig& config, std::ostream& out);

/// wer.csv: corpus-level WER and language-match rate of one hypothesis set.
void cmd_wer(const RunConfig& config, std::ostream& out);

/// report.<format>: the reports of each verdict run and their union.
void cmd_report(const RunConfig& config, std::ostream& out);

/// calibration.json: semantic threshold fitted to word-similarity judgements.
void cmd_calibrate(const RunConfig& config, std::ostream& out);

}  // namespace malens::cli
