#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "htp/corpus.hpp"
#include "htp/error.hpp"
#include "json.hpp"

namespace htp {

using ojson = nlohmann::ordered_json;

std::uint64_t Rng::below(std::uint64_t n) {
  // Reject the low residue so every value is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "dev") return Split::Dev;
  if (text == "test") return Split::Test;
  throw UsageError("unknown split '" + std::string(text) + "' (train|dev|test)");
}

std::string bucket_name(int bucket) { return "d" + std::to_string(bucket); }

int parse_bucket(std::string_view text) {
  std::string_view digits = text;
  if (!digits.empty() && (digits[0] == 'd' || digits[0] == 'D')) digits.remove_prefix(1);
  for (int b : kBuckets) {
    if (digits == std::to_string(b)) return b;
  }
  throw UsageError("unknown bucket '" + std::string(text) + "' (d0|d1|d2|d3|d5)");
}

int bucket_for_depth(int depth) {
  for (int b : kBuckets) {
    if (depth <= b) return b;
  }
  throw RangeError("depth " + std::to_string(depth) + " exceeds the largest bucket (5)");
}

const Example* Corpus::find(const std::string& id) const {
  for (const auto& e : examples) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::string certify(const Example& example) {
  Verdict v;
  try {
    v = verdict(example.theory, example.assumption, example.conclusion);
  } catch (const Error& e) {
    return std::string("engine rejects the theory: ") + e.what();
  }
  std::ostringstream problem;
  if (v.value != example.gold_label) {
    problem << "label " << to_string(example.gold_label) << " but engine says "
            << to_string(v.value);
  } else if (v.depth != example.gold_depth) {
    problem << "depth " << (example.gold_depth ? std::to_string(*example.gold_depth) : "null")
            << " but engine says " << (v.depth ? std::to_string(*v.depth) : "null");
  } else if (v.depth && *v.depth > example.bucket) {
    problem << "depth " << *v.depth << " exceeds bucket " << bucket_name(example.bucket);
  }
  return problem.str();
}

namespace {

ojson logical_form(const Literal& l) {
  ojson lf = ojson::array();
  lf.push_back(std::get<Entity>(l.args[0]).name);
  lf.push_back(l.predicate.name);
  if (l.args.size() > 1) {
    lf.push_back(std::get<Entity>(l.args[1]).name);
  } else {
    lf.push_back(nullptr);
  }
  lf.push_back(l.positive() ? "+" : "-");
  return lf;
}

Literal from_logical_form(const ojson& lf) {
  if (!lf.is_array() || lf.size() != 4 || !lf[0].is_string() || !lf[1].is_string() ||
      !(lf[2].is_string() || lf[2].is_null()) || !lf[3].is_string()) {
    throw FormatError("conclusion_lf must be [subject, predicate, object|null, \"+\"|\"-\"]", 0);
  }
  const std::string sign = lf[3].get<std::string>();
  if (sign != "+" && sign != "-") throw FormatError("conclusion_lf sign must be + or -", 0);
  Literal l;
  l.polarity = sign == "+" ? Polarity::Positive : Polarity::Negative;
  l.args.push_back(Entity{lf[0].get<std::string>()});
  if (lf[2].is_null()) {
    l.predicate = Predicate{lf[1].get<std::string>(), 1};
  } else {
    l.predicate = Predicate{lf[1].get<std::string>(), 2};
    l.args.push_back(Entity{lf[2].get<std::string>()});
  }
  return l;
}

const ojson& field(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'", 0);
  return *it;
}

std::string string_field(const ojson& j, const char* key) {
  const ojson& v = field(j, key);
  if (!v.is_string()) throw FormatError(std::string("field '") + key + "' must be a string", 0);
  return v.get<std::string>();
}

std::vector<std::string> sentences(const ojson& j, const char* key) {
  const ojson& v = field(j, key);
  if (!v.is_array()) throw FormatError(std::string("theory.") + key + " must be an array", 0);
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw FormatError(std::string("theory.") + key + " holds a non-string", 0);
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

std::string to_record(const Example& e) {
  ojson j;
  j["id"] = e.id;
  j["bucket"] = bucket_name(e.bucket);
  j["assumption"] = e.assumption == WorldAssumption::CWA ? "cwa" : "owa";
  ojson facts = ojson::array();
  ojson rules = ojson::array();
  for (const auto& f : e.theory.facts) facts.push_back(render_statement(f));
  for (const auto& r : e.theory.rules) rules.push_back(render_statement(r));
  j["theory"] = ojson{{"facts", facts}, {"rules", rules}};
  j["conclusion"] = render_literal(e.conclusion);
  j["conclusion_lf"] = logical_form(e.conclusion);
  std::string label = to_string(e.gold_label);
  std::transform(label.begin(), label.end(), label.begin(), ::tolower);
  j["label"] = label;
  if (e.gold_depth) {
    j["depth"] = *e.gold_depth;
  } else {
    j["depth"] = nullptr;
  }
  j["split"] = to_string(e.split);
  return j.dump();
}

Example from_record(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& err) {
    throw FormatError(std::string("invalid JSON: ") + err.what(), 0);
  }
  if (!j.is_object()) throw FormatError("record must be a JSON object", 0);
  Example e;
  e.id = string_field(j, "id");
  if (e.id.empty()) throw FormatError("empty id", 0);
  try {
    e.bucket = parse_bucket(string_field(j, "bucket"));
    e.assumption = parse_assumption(string_field(j, "assumption"));
    e.gold_label = parse_truth_value(string_field(j, "label"));
    e.split = parse_split(string_field(j, "split"));
  } catch (const UsageError& err) {
    throw FormatError(err.what(), 0);
  }
  const ojson& theory = field(j, "theory");
  if (!theory.is_object()) throw FormatError("theory must be an object", 0);
  try {
    e.theory = theory_from_sentences(sentences(theory, "facts"), sentences(theory, "rules"));
    e.conclusion = parse_literal(string_field(j, "conclusion"));
  } catch (const ParseError& err) {
    throw FormatError(err.what(), 0);
  } catch (const TheoryError& err) {
    throw FormatError(err.what(), 0);
  }
  if (!(from_logical_form(field(j, "conclusion_lf")) == e.conclusion)) {
    throw FormatError("conclusion_lf does not match the conclusion sentence", 0);
  }
  const ojson& depth = field(j, "depth");
  if (depth.is_number_integer()) {
    e.gold_depth = depth.get<int>();
    if (*e.gold_depth < 0) throw FormatError("negative depth", 0);
  } else if (!depth.is_null()) {
    throw FormatError("depth must be an integer or null", 0);
  }
  return e;
}

void write_canonical(const Corpus& corpus, std::ostream& out) {
  for (const auto& e : corpus.examples) out << to_record(e) << '\n';
}

void write_canonical(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_canonical(corpus, out);
  if (!out) throw Error("failed writing " + path);
}

Corpus read_canonical(std::istream& in, std::string name) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::set<std::string> ids;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example e;
    try {
      e = from_record(line);
    } catch (const FormatError& err) {
      throw FormatError(err.what(), n);
    }
    if (!ids.insert(e.id).second) throw FormatError("duplicate id '" + e.id + "'", n);
    corpus.examples.push_back(std::move(e));
  }
  std::vector<std::string> failed;
  std::string detail;
  for (const auto& e : corpus.examples) {
    std::string problem = certify(e);
    if (problem.empty()) continue;
    failed.push_back(e.id);
    if (failed.size() <= 5) detail += "\n  " + e.id + ": " + problem;
  }
  if (!failed.empty()) {
    throw CertificationError(std::to_string(failed.size()) + " example(s) fail certification" + detail,
                             failed);
  }
  std::set<int> buckets;
  for (const auto& e : corpus.examples) buckets.insert(e.bucket);
  if (buckets.size() == 1) corpus.bucket = *buckets.begin();
  return corpus;
}

Corpus load_canonical(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_canonical(in, path);
}

std::map<int, Corpus> bucket_by_depth(const Corpus& corpus) {
  std::map<int, Corpus> out;
  for (const auto& e : corpus.examples) {
    int b = e.gold_depth ? bucket_for_depth(*e.gold_depth) : e.bucket;
    Corpus& c = out[b];
    if (c.name.empty()) {
      c.name = corpus.name + "/" + bucket_name(b);
      c.bucket = b;
    }
    c.examples.push_back(e);
  }
  return out;
}

Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n > corpus.examples.size()) {
    throw UsageError("cannot sample " + std::to_string(n) + " of " +
                     std::to_string(corpus.examples.size()) + " examples");
  }
  std::vector<std::size_t> index(corpus.examples.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(index[i], index[i + rng.below(index.size() - i)]);
  }
  index.resize(n);
  std::sort(index.begin(), index.end());
  Corpus out{corpus.name, corpus.bucket, {}};
  for (std::size_t i : index) out.examples.push_back(corpus.examples[i]);
  return out;
}

}  // namespace htp
