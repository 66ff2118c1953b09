#include "htp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "htp/backends.hpp"
#include "htp/corpus.hpp"
#include "htp/engine.hpp"
#include "htp/error.hpp"
#include "htp/harness.hpp"
#include "htp/hypotest.hpp"
#include "htp/promptkit.hpp"
#include "htp/rulelang.hpp"

namespace htp {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
  if (!f) throw Error("failed writing " + path);
}

std::map<int, int> parse_quota(const std::string& text, const char* flag) {
  std::map<int, int> quota;
  if (text.empty()) return quota;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument(item);
      std::size_t used = 0;
      int key = std::stoi(item.substr(0, eq), &used);
      if (used != eq) throw std::invalid_argument(item);
      int count = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      quota[key] += count;
    } catch (const std::logic_error&) {
      throw UsageError(std::string(flag) + " expects depth=count[,depth=count...], got '" + item + "'");
    }
  }
  return quota;
}

std::string current_timestamp(const std::string& flag) {
  if (!flag.empty()) return flag;
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    char* end = nullptr;
    long long v = std::strtoll(epoch, &end, 10);
    if (*end != '\0' || v < 0) throw UsageError("SOURCE_DATE_EPOCH must be a non-negative integer");
    t = static_cast<std::time_t>(v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Options {
  std::string theory_path, conclusion, assumption = "owa", trace_style = "canonical";
  int bound = kDefaultBound;

  std::string style = "ht", corpus_path, example_id;
  int shots = -1;
  std::uint64_t seed = 0;

  GeneratorSpec gen;
  std::string gen_assumption = "owa", depth_quota, unknown_quota, failure_quota, split = "test";
  bool no_negation = false;
  std::string out_path;

  std::size_t sample_n = 0;

  std::string dialect, in_path, report_path;

  std::string backend, fixture, config_path, formats = "table,csv,jsonl", timestamp;
  int workers = 1;
  double temperature = 0.0;
  int max_tokens = 1024;

  std::string traces_path, records_path, report_format = "table";
};

int cmd_solve(const Options& o, std::ostream& out) {
  Theory theory = parse_theory(read_text(o.theory_path));
  WorldAssumption wa = parse_assumption(o.assumption);
  Literal q = parse_literal(o.conclusion);
  Closure c = closure(theory, wa);
  Verdict v = verdict(c, q);
  out << "Verdict: " << to_string(v.value) << "\n";
  out << "Depth: " << (v.depth ? std::to_string(*v.depth) : "none") << "\n";
  if (v.proof) {
    out << "Proof:\n";
    std::size_t k = 0;
    for (const auto& s : to_trace_steps(*v.proof)) out << "  step " << ++k << ": " << render_step(s) << "\n";
  }
  return kExitOk;
}

int cmd_trace(const Options& o, std::ostream& out) {
  Theory theory = parse_theory(read_text(o.theory_path));
  WorldAssumption wa = parse_assumption(o.assumption);
  HTrace t = hypothesis_test(theory, parse_literal(o.conclusion), wa, o.bound);
  if (o.trace_style == "canonical") {
    out << render_trace(t, TraceStyle::Canonical);
  } else if (o.trace_style == "narrative") {
    out << render_trace(t, TraceStyle::Narrative, &theory) << "\n";
  } else {
    throw UsageError("unknown trace style '" + o.trace_style + "' (canonical|narrative)");
  }
  return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
  PromptStyle style = parse_prompt_style(o.style);
  Example e;
  if (!o.corpus_path.empty()) {
    if (o.example_id.empty()) throw UsageError("render --corpus needs --id");
    Corpus c = load_canonical(o.corpus_path);
    const Example* found = c.find(o.example_id);
    if (!found) throw UsageError("no example '" + o.example_id + "' in " + o.corpus_path);
    e = *found;
  } else {
    if (o.theory_path.empty() || o.conclusion.empty()) {
      throw UsageError("render needs --corpus/--id or --theory/--conclusion");
    }
    e.theory = parse_theory(read_text(o.theory_path));
    e.conclusion = parse_literal(o.conclusion);
    e.assumption = parse_assumption(o.assumption);
  }
  int n = o.shots >= 0 ? o.shots : default_shot_count(e.assumption);
  out << prompt_for(e, select_shots(e.assumption, style, n, o.seed), style) << "\n";
  return kExitOk;
}

int cmd_gen(Options o, std::ostream& out) {
  o.gen.assumption = parse_assumption(o.gen_assumption);
  o.gen.allow_negation = !o.no_negation;
  o.gen.depth_quota = parse_quota(o.depth_quota, "--depth");
  o.gen.unknown_quota = parse_quota(o.unknown_quota, "--unknown");
  o.gen.failure_quota = parse_quota(o.failure_quota, "--failure");
  o.gen.seed = o.seed;
  o.gen.split = parse_split(o.split);
  Corpus c = generate(o.gen);
  std::ostringstream s;
  write_canonical(c, s);
  write_text(o.out_path, s.str(), out);
  return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
  Corpus c = load_canonical(o.corpus_path);
  std::ostringstream s;
  write_canonical(sample(c, o.sample_n, o.seed), s);
  write_text(o.out_path, s.str(), out);
  return kExitOk;
}

int cmd_adapt(const Options& o, std::ostream& out, std::ostream& err) {
  Adapted a = adapt_upstream(o.in_path, parse_dialect(o.dialect));
  std::ostringstream s;
  write_canonical(a.corpus, s);
  write_text(o.out_path, s.str(), out);
  if (!o.report_path.empty()) {
    write_text(o.report_path, a.report.summary(), out);
  } else {
    err << a.report.summary();
  }
  return kExitOk;
}

std::vector<ReportFormat> parse_formats(const std::string& list) {
  std::vector<ReportFormat> formats;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) formats.push_back(parse_report_format(item));
  if (formats.empty()) throw UsageError("--format needs at least one of table,csv,jsonl");
  return formats;
}

int cmd_eval(const Options& o, std::ostream& out) {
  std::vector<ReportFormat> formats = parse_formats(o.formats);
  BackendConfig bc;
  if (!o.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(o.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config " + o.config_path + " is not JSON: " + e.what());
    }
    bc = backend_config_from_json(j);
  } else {
    bc = backend_config_from_json(nlohmann::json::object());
  }
  if (!o.backend.empty()) bc.kind = parse_backend_kind(o.backend);
  if (!o.fixture.empty()) bc.fixture_path = o.fixture;
  std::unique_ptr<Backend> backend = make_backend(bc);

  Corpus corpus = load_canonical(o.corpus_path);
  if (corpus.examples.empty()) throw UsageError("corpus " + o.corpus_path + " is empty");
  ExperimentConfig cfg;
  cfg.style = parse_prompt_style(o.style);
  if (o.shots >= 0) cfg.shots = o.shots;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  cfg.params.temperature = o.temperature;
  cfg.params.max_tokens = o.max_tokens;
  std::vector<EvalRecord> records = run_experiment(corpus, *backend, cfg);
  MetricsReport report = compute_metrics(records);
  auto manifest = make_manifest(corpus, backend->name(), cfg, current_timestamp(o.timestamp));

  for (ReportFormat f : formats) {
    if (o.out_path.empty()) {
      if (f == ReportFormat::Table) out << render_report(report, records, manifest, f);
    } else {
      emit_report(report, records, manifest, f, o.out_path + "." + extension(f));
    }
  }
  if (!o.out_path.empty() &&
      std::find(formats.begin(), formats.end(), ReportFormat::Table) != formats.end()) {
    out << render_report(report, records, manifest, ReportFormat::Table);
  }
  auto failures = report.outcomes.find(Outcome::BackendFailure);
  if (failures != report.outcomes.end() && failures->second == records.size()) return kExitBackend;
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  Corpus corpus = load_canonical(o.corpus_path);
  std::ifstream in(o.traces_path, std::ios::binary);
  if (!in) throw Error("cannot open " + o.traces_path);
  Ratio proof{0, 0};
  std::size_t total = 0;
  std::string line;
  std::set<std::string> seen;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), n);
    }
    if (j.is_object() && j.contains("manifest") && j.size() == 1) continue;
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("completion") ||
        !j["completion"].is_string()) {
      throw FormatError("expected {\"id\": string, \"completion\": string}", n);
    }
    const std::string id = j["id"].get<std::string>();
    if (!seen.insert(id).second) throw FormatError("duplicate id '" + id + "'", n);
    const Example* e = corpus.find(id);
    if (!e) throw FormatError("id '" + id + "' is not in the corpus", n);
    const std::string completion = j["completion"].get<std::string>();
    std::optional<TruthValue> predicted = extract_answer(completion);
    ++total;
    std::string status;
    if (predicted != e->gold_label) {
      status = "incorrect";
    } else {
      ++proof.denominator;
      if (grade_trace(completion, e->theory, e->conclusion, e->assumption, predicted).verified) {
        ++proof.numerator;
        status = "verified";
      } else {
        status = "unverified";
      }
    }
    out << id << ": " << status << "\n";
  }
  out << "examples: " << total << "\n";
  if (proof.denominator == 0) {
    out << "proof accuracy: absent\n";
  } else {
    out << "proof accuracy: " << proof.decimal() << " (" << proof.fraction() << ")\n";
  }
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  ReportFormat format = parse_report_format(o.report_format);
  LoadedRecords loaded = load_records(o.records_path);
  MetricsReport report = compute_metrics(loaded.records);
  nlohmann::ordered_json manifest = loaded.manifest.value_or(nlohmann::ordered_json::object());
  write_text(o.out_path, render_report(report, loaded.records, manifest, format), out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deductive reasoning with hypothesis-testing traces", "htp"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> assumptions = {"cwa", "owa", "CWA", "OWA"};

  auto* solve = app.add_subcommand("solve", "Verdict and proof for a conclusion");
  solve->add_option("theory", o.theory_path, "Theory file, one statement per line")->required();
  solve->add_option("conclusion", o.conclusion, "Conclusion sentence")->required();
  solve->add_option("--assumption", o.assumption, "cwa|owa")->check(CLI::IsMember(assumptions));

  auto* trace = app.add_subcommand("trace", "Hypothesis-testing trace for a conclusion");
  trace->add_option("theory", o.theory_path, "Theory file")->required();
  trace->add_option("conclusion", o.conclusion, "Conclusion sentence")->required();
  trace->add_option("--assumption", o.assumption, "cwa|owa")->check(CLI::IsMember(assumptions));
  trace->add_option("--style", o.trace_style, "canonical|narrative");
  trace->add_option("--bound", o.bound, "Depth bound for each phase")->check(CLI::NonNegativeNumber);

  auto* render = app.add_subcommand("render", "Few-shot prompt for one question");
  render->add_option("--style", o.style, "standard|cot|ht");
  render->add_option("--corpus", o.corpus_path, "Canonical corpus file");
  render->add_option("--id", o.example_id, "Example id within --corpus");
  render->add_option("--theory", o.theory_path, "Theory file");
  render->add_option("--conclusion", o.conclusion, "Conclusion sentence");
  render->add_option("--assumption", o.assumption, "cwa|owa")->check(CLI::IsMember(assumptions));
  render->add_option("--shots", o.shots, "Exemplar count (default 4 CWA, 6 OWA)");
  render->add_option("--seed", o.seed, "Shot selection seed");

  auto* gen = app.add_subcommand("gen", "Generate a certified corpus");
  gen->add_option("--entities", o.gen.entities);
  gen->add_option("--attributes", o.gen.attributes);
  gen->add_option("--relations", o.gen.relations);
  gen->add_option("--rules", o.gen.rules);
  gen->add_option("--max-antecedents", o.gen.max_antecedents);
  gen->add_flag("--no-negation", o.no_negation);
  gen->add_option("--assumption", o.gen_assumption, "cwa|owa")->check(CLI::IsMember(assumptions));
  gen->add_option("--depth", o.depth_quota, "Derived examples per depth, e.g. 0=10,1=10");
  gen->add_option("--unknown", o.unknown_quota, "Unknown examples per bucket (OWA)");
  gen->add_option("--failure", o.failure_quota, "Closed-world failures per bucket (CWA)");
  gen->add_option("--seed", o.seed);
  gen->add_option("--attempts", o.gen.attempts_per_example);
  gen->add_option("--split", o.split, "train|dev|test");
  gen->add_option("--prefix", o.gen.id_prefix, "Example id prefix");
  gen->add_option("--name", o.gen.name);
  gen->add_option("--out", o.out_path, "Output file (default stdout)");

  auto* samp = app.add_subcommand("sample", "Uniform sample without replacement");
  samp->add_option("--corpus", o.corpus_path)->required();
  samp->add_option("--n", o.sample_n)->required();
  samp->add_option("--seed", o.seed);
  samp->add_option("--out", o.out_path);

  auto* adapt = app.add_subcommand("adapt", "Convert upstream RuleTaker/ProofWriter files");
  adapt->add_option("--dialect", o.dialect, "ruletaker|proofwriter")->required();
  adapt->add_option("--in", o.in_path)->required();
  adapt->add_option("--out", o.out_path);
  adapt->add_option("--report", o.report_path, "Reconciliation report file (default stderr)");

  auto* eval = app.add_subcommand("eval", "Run a corpus through a backend and score it");
  eval->add_option("--corpus", o.corpus_path)->required();
  eval->add_option("--style", o.style, "standard|cot|ht");
  eval->add_option("--backend", o.backend, "oracle|scripted|http (default: config file, else oracle)");
  eval->add_option("--fixture", o.fixture, "Scripted completions file");
  eval->add_option("--config", o.config_path, "Backend config JSON");
  eval->add_option("--workers", o.workers)->check(CLI::PositiveNumber);
  eval->add_option("--shots", o.shots);
  eval->add_option("--seed", o.seed);
  eval->add_option("--temperature", o.temperature)->check(CLI::NonNegativeNumber);
  eval->add_option("--max-tokens", o.max_tokens)->check(CLI::PositiveNumber);
  eval->add_option("--out", o.out_path, "Report path prefix; writes <prefix>.txt/.csv/.jsonl");
  eval->add_option("--format", o.formats, "Comma list of table,csv,jsonl");
  eval->add_option("--timestamp", o.timestamp, "Manifest timestamp (default SOURCE_DATE_EPOCH or now)");

  auto* verify = app.add_subcommand("verify", "Proof accuracy of completions against a corpus");
  verify->add_option("--corpus", o.corpus_path)->required();
  verify->add_option("--traces", o.traces_path, "Lines of {\"id\", \"completion\"}")->required();

  auto* report = app.add_subcommand("report", "Recompute metrics from a records file");
  report->add_option("--records", o.records_path)->required();
  report->add_option("--format", o.report_format, "table|csv|jsonl");
  report->add_option("--out", o.out_path);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(o, out);
    if (trace->parsed()) return cmd_trace(o, out);
    if (render->parsed()) return cmd_render(o, out);
    if (gen->parsed()) return cmd_gen(o, out);
    if (samp->parsed()) return cmd_sample(o, out);
    if (adapt->parsed()) return cmd_adapt(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    if (report->parsed()) return cmd_report(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    err << "backend error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitBackend;
  } catch (const FormatError& e) {
    err << "error: ";
    if (e.line() > 0) err << "line " << e.line() << ": ";
    err << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace htp
