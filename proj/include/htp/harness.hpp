#pragma once

// Experiments over corpus x style x backend, metrics with exact ratios,
// and report emission.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htp/backends.hpp"
#include "htp/corpus.hpp"
#include "htp/hypotest.hpp"
#include "htp/promptkit.hpp"
#include "json.hpp"

namespace htp {

/// Exact count ratio; compares and prints without rounding surprises.
struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  bool operator==(const Ratio& other) const {
    return numerator * other.denominator == other.numerator * denominator;
  }
  /// "13/50"
  std::string fraction() const;
  /// Shortest decimal that round-trips, e.g. "0.26".
  std::string decimal() const;
};

enum class Outcome { Answered, ExtractionFailure, BackendFailure };
std::string to_string(Outcome outcome);  // "answered", "extraction-failure", "backend-error"

struct EvalRecord {
  std::string id;
  int bucket = 0;
  WorldAssumption assumption = WorldAssumption::OWA;
  PromptStyle style = PromptStyle::Standard;
  Literal conclusion;
  TruthValue gold_label = TruthValue::Unknown;
  Outcome outcome = Outcome::Answered;
  std::optional<TruthValue> predicted;
  bool correct = false;
  std::string completion;
  std::string error;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  std::optional<HTrace> trace;  // hypothesis-testing runs whose completion parses
  std::optional<bool> trace_verified;
  bool operator==(const EvalRecord&) const = default;
};

nlohmann::ordered_json to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::ordered_json& j);  // throws FormatError(line 0)

struct ExperimentConfig {
  PromptStyle style = PromptStyle::HypothesisTesting;
  std::optional<int> shots;  // default_shot_count of each example's assumption
  std::uint64_t seed = 0;    // shot selection
  int workers = 1;
  DecodingParams params;
};

/// Label-balanced exemplars drawn from a train-split generated pool under
/// the given assumption.
std::vector<Exemplar> select_shots(WorldAssumption assumption, PromptStyle style, int count,
                                   std::uint64_t seed);

/// Prompt for one example with the run's exemplars.
std::string prompt_for(const Example& example, const std::vector<Exemplar>& shots, PromptStyle style);

/// Reads a completion as a trace (canonical, else narrative) and checks it
/// against the example: right conclusion and assumption, accepted by
/// verify_trace with `claimed` as the verdict.
struct GradedTrace {
  std::optional<HTrace> trace;
  bool verified = false;
};
GradedTrace grade_trace(const std::string& completion, const Theory& theory, const Literal& conclusion,
                        WorldAssumption assumption, std::optional<TruthValue> claimed);

/// One record per example, sorted by id. Backend failures become records.
std::vector<EvalRecord> run_experiment(const Corpus& corpus, Backend& backend,
                                       const ExperimentConfig& config);

struct Cell {
  std::size_t correct = 0;
  std::size_t total = 0;
  Ratio accuracy() const { return Ratio{correct, total}; }
  bool operator==(const Cell&) const = default;
};

struct MetricsReport {
  Cell overall;
  std::map<int, Cell> per_bucket;         // only non-empty cells
  std::map<TruthValue, Cell> per_label;   // only non-empty cells
  std::optional<Ratio> unknown_accuracy;  // absent without gold-Unknown records
  std::optional<Ratio> proof_accuracy;    // hypothesis-testing records only
  std::map<Outcome, std::size_t> outcomes;
  bool operator==(const MetricsReport&) const = default;
};

/// Throws UsageError on empty input.
MetricsReport compute_metrics(const std::vector<EvalRecord>& records);

/// Among correct records, the fraction whose completion reads as a trace that
/// verifies against the theory. Absent when no record is correct.
std::optional<Ratio> proof_accuracy(const std::vector<EvalRecord>& records,
                                    const std::map<std::string, Theory>& theories,
                                    WorldAssumption assumption);

/// Hex SHA-256 of the canonical corpus bytes.
std::string corpus_digest(const Corpus& corpus);

/// Reproducibility header embedded in every report. The timestamp comes
/// from the caller (CLI flag or SOURCE_DATE_EPOCH).
nlohmann::ordered_json make_manifest(const Corpus& corpus, const std::string& backend,
                                     const ExperimentConfig& config, const std::string& timestamp);

enum class ReportFormat { Table, Csv, Jsonl };
ReportFormat parse_report_format(std::string_view text);  // throws UsageError
std::string extension(ReportFormat format);

/// Deterministic bytes for the given inputs.
std::string render_report(const MetricsReport& report, const std::vector<EvalRecord>& records,
                          const nlohmann::ordered_json& manifest, ReportFormat format);
/// Writes render_report to path.
void emit_report(const MetricsReport& report, const std::vector<EvalRecord>& records,
                 const nlohmann::ordered_json& manifest, ReportFormat format, const std::string& path);

/// Reads a jsonl report back: manifest line (if any) and records.
struct LoadedRecords {
  std::optional<nlohmann::ordered_json> manifest;
  std::vector<EvalRecord> records;
};
LoadedRecords read_records(std::istream& in);
LoadedRecords load_records(const std::string& path);

}  // namespace htp
