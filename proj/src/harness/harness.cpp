#include "htp/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "htp/error.hpp"

namespace htp {

using ojson = nlohmann::ordered_json;

std::string Ratio::fraction() const {
  return std::to_string(numerator) + "/" + std::to_string(denominator);
}

std::string Ratio::decimal() const {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value());
  return std::string(buf, end);
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Answered: return "answered";
    case Outcome::ExtractionFailure: return "extraction-failure";
    case Outcome::BackendFailure: return "backend-error";
  }
  return "answered";
}

namespace {

Outcome parse_outcome(const std::string& text) {
  for (Outcome o : {Outcome::Answered, Outcome::ExtractionFailure, Outcome::BackendFailure}) {
    if (to_string(o) == text) return o;
  }
  throw FormatError("unknown outcome '" + text + "'", 0);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  return s;
}

template <typename T>
ojson optional_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

const ojson& need(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("record lacks '") + key + "'", 0);
  return *it;
}

std::string need_string(const ojson& j, const char* key) {
  const ojson& v = need(j, key);
  if (!v.is_string()) throw FormatError(std::string("record field '") + key + "' must be a string", 0);
  return v.get<std::string>();
}

std::optional<int> optional_int(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw FormatError(std::string("record field '") + key + "' must be an integer", 0);
  return it->get<int>();
}

}  // namespace

ojson to_json(const EvalRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["bucket"] = bucket_name(r.bucket);
  j["assumption"] = lower(to_string(r.assumption));
  j["style"] = to_string(r.style);
  j["conclusion"] = render_literal(r.conclusion);
  j["gold"] = lower(to_string(r.gold_label));
  j["outcome"] = to_string(r.outcome);
  j["predicted"] = r.predicted ? ojson(lower(to_string(*r.predicted))) : ojson(nullptr);
  j["correct"] = r.correct;
  j["completion"] = r.completion;
  j["error"] = r.error.empty() ? ojson(nullptr) : ojson(r.error);
  j["prompt_tokens"] = optional_json(r.prompt_tokens);
  j["completion_tokens"] = optional_json(r.completion_tokens);
  j["trace"] = r.trace ? ojson(render_trace(*r.trace, TraceStyle::Canonical)) : ojson(nullptr);
  j["trace_verified"] = optional_json(r.trace_verified);
  return j;
}

EvalRecord record_from_json(const ojson& j) {
  if (!j.is_object()) throw FormatError("record must be a JSON object", 0);
  EvalRecord r;
  try {
    r.id = need_string(j, "id");
    r.bucket = parse_bucket(need_string(j, "bucket"));
    r.assumption = parse_assumption(need_string(j, "assumption"));
    r.style = parse_prompt_style(need_string(j, "style"));
    r.conclusion = parse_literal(need_string(j, "conclusion"));
    r.gold_label = parse_truth_value(need_string(j, "gold"));
    r.outcome = parse_outcome(need_string(j, "outcome"));
    const ojson& predicted = need(j, "predicted");
    if (!predicted.is_null()) {
      if (!predicted.is_string()) throw FormatError("record field 'predicted' must be a string or null", 0);
      r.predicted = parse_truth_value(predicted.get<std::string>());
    }
    const ojson& trace = need(j, "trace");
    if (!trace.is_null()) {
      if (!trace.is_string()) throw FormatError("record field 'trace' must be a string or null", 0);
      r.trace = parse_trace(trace.get<std::string>());
    }
  } catch (const UsageError& e) {
    throw FormatError(e.what(), 0);
  } catch (const ParseError& e) {
    throw FormatError(e.what(), 0);
  }
  const ojson& correct = need(j, "correct");
  if (!correct.is_boolean()) throw FormatError("record field 'correct' must be a boolean", 0);
  r.correct = correct.get<bool>();
  r.completion = need_string(j, "completion");
  if (auto it = j.find("error"); it != j.end() && it->is_string()) r.error = it->get<std::string>();
  r.prompt_tokens = optional_int(j, "prompt_tokens");
  r.completion_tokens = optional_int(j, "completion_tokens");
  if (auto it = j.find("trace_verified"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw FormatError("record field 'trace_verified' must be a boolean or null", 0);
    r.trace_verified = it->get<bool>();
  }
  if (r.correct != (r.predicted == r.gold_label)) {
    throw FormatError("record '" + r.id + "': correct flag disagrees with predicted/gold", 0);
  }
  return r;
}

std::vector<Exemplar> select_shots(WorldAssumption assumption, PromptStyle style, int count,
                                   std::uint64_t seed) {
  if (count < 0) throw UsageError("shot count must be non-negative");
  std::vector<Exemplar> shots;
  if (count == 0) return shots;
  GeneratorSpec spec;
  spec.assumption = assumption;
  spec.seed = seed;
  spec.split = Split::Train;
  spec.id_prefix = "shot";
  spec.name = "shots";
  // Depth quotas alternate True/False, so each depth yields both labels.
  spec.depth_quota = {{1, count}, {2, count}};
  if (assumption == WorldAssumption::OWA) spec.unknown_quota = {{1, count}};
  Corpus pool = generate(spec);

  std::map<TruthValue, std::vector<const Example*>> by_label;
  for (const auto& e : pool.examples) by_label[e.gold_label].push_back(&e);
  Rng rng(seed ^ 0x5eed5eed5eedULL);
  for (auto& [label, group] : by_label) rng.shuffle(group);

  std::vector<TruthValue> order = {TruthValue::True, TruthValue::False};
  if (assumption == WorldAssumption::OWA) order.push_back(TruthValue::Unknown);
  std::map<TruthValue, std::size_t> next;
  for (int i = 0; static_cast<int>(shots.size()) < count; ++i) {
    TruthValue label = order[static_cast<std::size_t>(i) % order.size()];
    const Example* e = by_label[label].at(next[label]++);
    shots.push_back(build_exemplar(e->theory, e->conclusion, e->assumption, style));
  }
  return shots;
}

std::string prompt_for(const Example& example, const std::vector<Exemplar>& shots, PromptStyle style) {
  Prompt p{shots, question_text(example.theory, example.conclusion), style};
  return render_prompt(p);
}

GradedTrace grade_trace(const std::string& completion, const Theory& theory, const Literal& conclusion,
                        WorldAssumption assumption, std::optional<TruthValue> claimed) {
  GradedTrace out;
  try {
    out.trace = read_trace(completion, theory, assumption);
  } catch (const Error&) {
    out.trace.reset();
  }
  if (!out.trace || !claimed) return out;
  if (!(out.trace->conclusion == conclusion) || out.trace->assumption != assumption) return out;
  out.verified = verify_trace(theory, *out.trace, *claimed, assumption).accepted;
  return out;
}

std::vector<EvalRecord> run_experiment(const Corpus& corpus, Backend& backend,
                                       const ExperimentConfig& config) {
  if (config.workers < 1) throw UsageError("workers must be at least 1");
  std::map<WorldAssumption, std::vector<Exemplar>> shots;
  for (const auto& e : corpus.examples) {
    if (shots.count(e.assumption)) continue;
    int n = config.shots.value_or(default_shot_count(e.assumption));
    shots[e.assumption] = select_shots(e.assumption, config.style, n, config.seed);
  }

  std::vector<EvalRecord> records(corpus.examples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < corpus.examples.size(); i = next++) {
      const Example& e = corpus.examples[i];
      EvalRecord& r = records[i];
      r.id = e.id;
      r.bucket = e.bucket;
      r.assumption = e.assumption;
      r.style = config.style;
      r.conclusion = e.conclusion;
      r.gold_label = e.gold_label;
      CompletionRequest request{e.id, prompt_for(e, shots[e.assumption], config.style), config.params,
                                config.style, e.assumption};
      try {
        CompletionResult result = backend.complete(request);
        r.completion = result.text;
        r.prompt_tokens = result.prompt_tokens;
        r.completion_tokens = result.completion_tokens;
        r.predicted = extract_answer(result.text);
        r.outcome = r.predicted ? Outcome::Answered : Outcome::ExtractionFailure;
      } catch (const std::exception& ex) {
        r.outcome = Outcome::BackendFailure;
        r.error = ex.what();
      }
      r.correct = r.predicted == r.gold_label;
      if (config.style == PromptStyle::HypothesisTesting && r.outcome != Outcome::BackendFailure) {
        GradedTrace g = grade_trace(r.completion, e.theory, e.conclusion, e.assumption, r.predicted);
        r.trace = g.trace;
        if (g.trace) r.trace_verified = g.verified;
      }
    }
  };
  if (config.workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < config.workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(records.begin(), records.end(),
            [](const EvalRecord& a, const EvalRecord& b) { return a.id < b.id; });
  return records;
}

MetricsReport compute_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw UsageError("no records to score");
  MetricsReport m;
  Cell proof;
  bool any_ht = false;
  for (const auto& r : records) {
    auto add = [&](Cell& c) {
      ++c.total;
      if (r.correct) ++c.correct;
    };
    add(m.overall);
    add(m.per_bucket[r.bucket]);
    add(m.per_label[r.gold_label]);
    ++m.outcomes[r.outcome];
    if (r.style == PromptStyle::HypothesisTesting) {
      any_ht = true;
      if (r.correct) {
        ++proof.total;
        if (r.trace_verified.value_or(false)) ++proof.correct;
      }
    }
  }
  if (auto it = m.per_label.find(TruthValue::Unknown); it != m.per_label.end()) {
    m.unknown_accuracy = it->second.accuracy();
  }
  if (any_ht && proof.total > 0) m.proof_accuracy = proof.accuracy();
  return m;
}

std::optional<Ratio> proof_accuracy(const std::vector<EvalRecord>& records,
                                    const std::map<std::string, Theory>& theories,
                                    WorldAssumption assumption) {
  Ratio r{0, 0};
  for (const auto& rec : records) {
    if (!rec.correct) continue;
    ++r.denominator;
    auto it = theories.find(rec.id);
    if (it == theories.end()) continue;
    if (grade_trace(rec.completion, it->second, rec.conclusion, assumption, rec.predicted).verified) {
      ++r.numerator;
    }
  }
  if (r.denominator == 0) return std::nullopt;
  return r;
}

std::string corpus_digest(const Corpus& corpus) {
  std::ostringstream bytes;
  write_canonical(corpus, bytes);
  const std::string data = bytes.str();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

ojson make_manifest(const Corpus& corpus, const std::string& backend, const ExperimentConfig& config,
                    const std::string& timestamp) {
  ojson m;
  m["corpus"] = corpus.name;
  m["corpus_sha256"] = corpus_digest(corpus);
  m["examples"] = corpus.examples.size();
  m["style"] = to_string(config.style);
  m["backend"] = backend;
  m["shots"] = config.shots ? ojson(*config.shots) : ojson("default");
  m["shot_seed"] = config.seed;
  m["temperature"] = config.params.temperature;
  m["max_tokens"] = config.params.max_tokens;
  m["timestamp"] = timestamp;
  return m;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "table") return ReportFormat::Table;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "jsonl") return ReportFormat::Jsonl;
  throw UsageError("unknown report format '" + std::string(text) + "' (table|csv|jsonl)");
}

std::string extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return "txt";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Jsonl: return "jsonl";
  }
  return "txt";
}

namespace {

std::string manifest_value(const ojson& manifest, const char* key) {
  auto it = manifest.find(key);
  if (it == manifest.end()) return "";
  return it->is_string() ? it->get<std::string>() : it->dump();
}

std::string cell_text(const Cell& c) {
  return c.accuracy().decimal() + " (" + c.accuracy().fraction() + ")";
}

}  // namespace

std::string render_report(const MetricsReport& report, const std::vector<EvalRecord>& records,
                          const ojson& manifest, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Jsonl:
      out << ojson{{"manifest", manifest}}.dump() << '\n';
      for (const auto& r : records) out << to_json(r).dump() << '\n';
      break;
    case ReportFormat::Csv:
      out << "# manifest " << manifest.dump() << '\n';
      out << "bucket,style,backend,accuracy,n\n";
      for (const auto& [bucket, cell] : report.per_bucket) {
        out << bucket_name(bucket) << ',' << manifest_value(manifest, "style") << ','
            << manifest_value(manifest, "backend") << ',' << cell.accuracy().decimal() << ','
            << cell.total << '\n';
      }
      break;
    case ReportFormat::Table: {
      out << "manifest: " << manifest.dump() << '\n';
      out << "overall accuracy: " << cell_text(report.overall) << '\n';
      out << std::left << std::setw(10) << "bucket" << std::setw(8) << "n" << "accuracy\n";
      for (const auto& [bucket, cell] : report.per_bucket) {
        out << std::setw(10) << bucket_name(bucket) << std::setw(8) << cell.total << cell_text(cell) << '\n';
      }
      out << std::setw(10) << "label" << std::setw(8) << "n" << "accuracy\n";
      for (const auto& [label, cell] : report.per_label) {
        out << std::setw(10) << to_string(label) << std::setw(8) << cell.total << cell_text(cell) << '\n';
      }
      out << "unknown accuracy: "
          << (report.unknown_accuracy
                  ? report.unknown_accuracy->decimal() + " (" + report.unknown_accuracy->fraction() + ")"
                  : std::string("absent"))
          << '\n';
      out << "proof accuracy: "
          << (report.proof_accuracy
                  ? report.proof_accuracy->decimal() + " (" + report.proof_accuracy->fraction() + ")"
                  : std::string("absent"))
          << '\n';
      out << "outcomes:";
      for (const auto& [o, n] : report.outcomes) out << ' ' << to_string(o) << '=' << n;
      out << '\n';
      break;
    }
  }
  return out.str();
}

void emit_report(const MetricsReport& report, const std::vector<EvalRecord>& records, const ojson& manifest,
                 ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << render_report(report, records, manifest, format);
  if (!out) throw Error("failed writing " + path);
}

LoadedRecords read_records(std::istream& in) {
  LoadedRecords out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), n);
    }
    if (j.is_object() && j.size() == 1 && j.contains("manifest")) {
      out.manifest = j["manifest"];
      continue;
    }
    try {
      out.records.push_back(record_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), n);
    }
  }
  return out;
}

LoadedRecords load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_records(in);
}

}  // namespace htp
