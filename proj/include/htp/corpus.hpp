#pragma once

// Datasets: the canonical line-delimited format, adapters for upstream
// RuleTaker/ProofWriter files, a seeded generator whose labels and depths
// are certified by the engine, depth bucketing and sampling.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "htp/engine.hpp"
#include "htp/rulelang.hpp"

namespace htp {

/// Portable generator: mt19937_64 plus distribution code that does not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  bool chance(std::uint64_t numerator, std::uint64_t denominator) {
    return below(denominator) < numerator;
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

enum class Split { Train, Dev, Test };
std::string to_string(Split split);
Split parse_split(std::string_view text);  // throws UsageError

inline constexpr int kBuckets[] = {0, 1, 2, 3, 5};

/// "d0", "d1", "d2", "d3", "d5".
std::string bucket_name(int bucket);
/// Accepts "d3" or "3". Throws UsageError for anything outside the buckets.
int parse_bucket(std::string_view text);
/// Smallest bucket >= depth. Throws RangeError beyond 5.
int bucket_for_depth(int depth);

struct Example {
  std::string id;
  int bucket = 0;
  WorldAssumption assumption = WorldAssumption::OWA;
  Theory theory;
  Literal conclusion;
  TruthValue gold_label = TruthValue::Unknown;
  std::optional<int> gold_depth;
  Split split = Split::Test;
  bool operator==(const Example&) const = default;
};

struct Corpus {
  std::string name;
  std::optional<int> bucket;
  std::vector<Example> examples;
  const Example* find(const std::string& id) const;
};

/// Label and depth from the engine; a mismatch with the example's gold
/// values is described in the returned string (empty when certified).
std::string certify(const Example& example);

// Canonical format -----------------------------------------------------------

/// One JSON object per line, keys in the frozen order.
std::string to_record(const Example& example);
Example from_record(std::string_view line);  // throws FormatError(line 0)

void write_canonical(const Corpus& corpus, std::ostream& out);
void write_canonical(const Corpus& corpus, const std::string& path);

/// Parses and re-certifies every record. Throws FormatError with the line
/// number or CertificationError listing every failing id.
Corpus load_canonical(const std::string& path);
Corpus read_canonical(std::istream& in, std::string name = "");

// Upstream adapters -----------------------------------------------------------

enum class Dialect { RuleTaker, ProofWriter };
Dialect parse_dialect(std::string_view text);  // throws UsageError

struct ReconciliationReport {
  std::size_t records = 0;
  std::size_t questions = 0;
  std::size_t kept = 0;
  std::vector<std::pair<std::string, std::string>> skipped;         // (id, reason)
  std::vector<std::pair<std::string, std::string>> disagreements;   // (id, detail), excluded
  std::vector<std::pair<std::string, std::string>> depth_mismatches;  // kept, engine depth used
  std::string summary() const;
};

struct Adapted {
  Corpus corpus;
  ReconciliationReport report;
};

/// Throws AdapterError naming the offending field path.
Adapted adapt_upstream(const std::string& path, Dialect dialect);
Adapted adapt_upstream(std::istream& in, Dialect dialect, const std::string& source_name);

// Generator -------------------------------------------------------------------

struct GeneratorSpec {
  int entities = 4;
  int attributes = 8;
  int relations = 1;
  int rules = 6;
  int max_antecedents = 2;
  bool allow_negation = true;
  WorldAssumption assumption = WorldAssumption::OWA;
  std::map<int, int> depth_quota;    // exact derivation depth -> count
  std::map<int, int> unknown_quota;  // bucket -> count of Unknown examples (OWA only)
  std::map<int, int> failure_quota;  // bucket -> count of closed-world failures (CWA only)
  std::uint64_t seed = 0;
  int attempts_per_example = 500;
  Split split = Split::Test;
  std::string id_prefix = "gen";
  std::string name = "generated";
};

/// Throws UsageError for an invalid spec.
void validate_spec(const GeneratorSpec& spec);

/// Deterministic in the spec. Throws GenerationError when a quota cannot be
/// met within the retry budget.
Corpus generate(const GeneratorSpec& spec);

/// Random stratified theory (no planted chain), exposed for property tests.
Theory random_theory(const GeneratorSpec& spec, Rng& rng);

// Bucketing and sampling -------------------------------------------------------

/// Depth-bearing examples go to bucket_for_depth(depth); the rest keep
/// their declared bucket.
std::map<int, Corpus> bucket_by_depth(const Corpus& corpus);

/// n examples uniformly without replacement, in original order.
/// Throws UsageError when n exceeds the corpus size.
Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

}  // namespace htp
