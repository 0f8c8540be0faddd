#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "accent_eval/stats.hpp"

namespace accent_eval::harness {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Inputs for one utterance of one system. Paths are absolute after loading.
struct UtteranceEntry {
  std::optional<std::filesystem::path> audio;
  std::optional<std::filesystem::path> alignment;
  std::optional<std::filesystem::path> ppg;
  std::map<std::string, std::filesystem::path> embeddings;  // source_tag -> file
};

struct SystemEntry {
  std::string name;
  int hypothesized_rank = 0;  // unused for ground truth
  std::string speaker = "speaker";
  double formant_ceiling = 5000.0;
  std::optional<std::filesystem::path> transcripts;  // JSON lines
  std::map<std::string, UtteranceEntry> entries;     // utterance id -> inputs
};

struct Utterance {
  std::string id;
  std::string text;
};

struct EvalManifest {
  std::vector<Utterance> utterances;
  SystemEntry ground_truth;
  std::vector<SystemEntry> systems;
  std::string tier = "phones";
  bool exclude_reduced_vowels = false;
  bool normalize_text = true;
};

/// Reads the manifest JSON. Relative paths resolve against the manifest's
/// directory. Throws ParseError on malformed JSON and Errc::config on a
/// structural problem (missing field, duplicate id, ranks that are not a
/// permutation of 1..N).
EvalManifest load_manifest(const std::filesystem::path& path);
EvalManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Every metric this harness can compute, in report order. Embedding
/// similarities appear as "cossim:<source_tag>".
std::vector<std::string> known_metrics(const EvalManifest& m);

stats::Direction metric_direction(const std::string& metric);

/// Expands a comma-separated selector ("all" or metric names; "cossim"
/// selects every embedding tag) into metric names. Throws Errc::config for
/// an unknown name.
std::vector<std::string> select_metrics(const EvalManifest& m, const std::string& selector);

/// Checks that every input needed by `metrics` is declared and exists on
/// disk for ground truth and every system. Throws Errc::config listing the
/// first problems found.
void validate_inputs(const EvalManifest& m, const std::vector<std::string>& metrics);

struct MetricSummary {
  std::string metric;
  stats::Direction direction = stats::Direction::lower_better;
  std::optional<double> mean;  // empty when every utterance failed
  std::size_t count = 0;
  std::size_t skipped = 0;
};

struct SystemSummary {
  std::string name;
  int hypothesized_rank = 0;
  std::vector<MetricSummary> metrics;  // same order as MetricReport::metrics
};

struct UtteranceValue {
  std::string system;
  std::string utterance;
  std::string metric;
  std::optional<double> value;
  std::string error;
};

struct MetricReport {
  std::vector<std::string> metrics;
  std::vector<SystemSummary> systems;
  std::vector<stats::SrccResult> footer;
  nlohmann::json metadata;
  std::vector<UtteranceValue> utterance_values;
};

struct ReportOptions {
  std::size_t jobs = 1;
  stats::SrccOptions srcc;
};

/// Computes the selected metrics for every (system, utterance) pair against
/// ground truth and averages them per system. Per-utterance failures are
/// logged, skipped and counted.
MetricReport run_report(const EvalManifest& m, const std::vector<std::string>& metrics,
                        const ReportOptions& opts = {});

/// Builds a report from externally computed per-system means.
MetricReport precomputed_report(const stats::MetricTable& t, const stats::SrccOptions& opts = {});

/// Hash of the report content with the timestamp removed.
std::string content_hash(const MetricReport& r);

nlohmann::json to_json(const MetricReport& r);

/// Per-system table in the metric-table TSV layout followed by '#'-prefixed
/// footer and metadata lines, so the body can be fed back to the stats
/// command.
void write_tsv(std::ostream& out, const MetricReport& r);

/// {system: {speaker: vowel-space summary}} for the chosen systems plus
/// ground truth. An empty selection yields an empty object; nullopt selects
/// every system.
nlohmann::json export_vowel_space(const EvalManifest& m,
                                  const std::optional<std::vector<std::string>>& systems = std::nullopt,
                                  std::size_t jobs = 1);

}  // namespace accent_eval::harness
