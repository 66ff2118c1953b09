#include <algorithm>
#include <cstdio>
#include <set>

#include "htp/corpus.hpp"
#include "htp/error.hpp"

namespace htp {

namespace {

const char* const kEntityNames[] = {"anne", "bob", "charlie", "dave", "erin", "fiona",
                                    "gary", "harry", "ivy",  "jack", "kate", "liam",
                                    "mia",  "noah", "olga", "paul"};
const char* const kAttributeNames[] = {"big",   "blue",  "cold",  "green", "kind",  "nice",
                                       "red",   "round", "rough", "smart", "white", "young",
                                       "furry", "quiet", "sad",   "tall"};
const char* const kRelationNames[] = {"chase", "eat", "like", "need", "see", "visit"};

constexpr int kMaxEntities = 16;
constexpr int kMaxAttributes = 16;
constexpr int kMaxRelations = 6;
constexpr int kMaxDepth = 5;

// Vocabulary for one theory: predicates carry a rank; a rule's conditions
// use predicates of rank <= its conclusion's, negated ones strictly lower,
// so every theory is stratified.
struct Vocabulary {
  std::vector<Entity> entities;
  std::vector<Predicate> predicates;
  std::map<Predicate, int> rank;

  std::vector<Predicate> attributes_by_rank() const {
    std::vector<Predicate> out;
    for (const auto& p : predicates) {
      if (p.arity == 1) out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [&](const Predicate& a, const Predicate& b) { return rank.at(a) < rank.at(b); });
    return out;
  }
};

class TheoryBuilder {
 public:
  TheoryBuilder(const GeneratorSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
    for (int i = 0; i < spec.entities; ++i) vocab_.entities.push_back(Entity{kEntityNames[i]});
    for (int i = 0; i < spec.attributes; ++i) {
      vocab_.predicates.push_back(Predicate{kAttributeNames[i], 1});
    }
    for (int i = 0; i < spec.relations; ++i) {
      vocab_.predicates.push_back(Predicate{kRelationNames[i], 2});
    }
    std::vector<Predicate> order = vocab_.predicates;
    rng_.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) vocab_.rank[order[i]] = static_cast<int>(i);
  }

  const Vocabulary& vocabulary() const { return vocab_; }
  bool open_world() const { return spec_.assumption == WorldAssumption::OWA; }
  bool negation() const { return spec_.allow_negation; }

  Entity entity() { return vocab_.entities[rng_.below(vocab_.entities.size())]; }

  Literal ground(const Predicate& p, const Entity& subject, Polarity pol = Polarity::Positive) {
    Literal l{p, {subject}, pol};
    if (p.arity == 2) l.args.push_back(entity());
    return l;
  }

  // A literal over `p` mentioning the rule variable.
  Literal with_variable(const Predicate& p, Polarity pol) {
    if (p.arity == 1) return Literal{p, {Variable{}}, pol};
    if (rng_.chance(1, 2)) return Literal{p, {Variable{}, entity()}, pol};
    return Literal{p, {entity(), Variable{}}, pol};
  }

  Literal random_fact() {
    const Predicate& p = vocab_.predicates[rng_.below(vocab_.predicates.size())];
    Polarity pol = (open_world() && negation() && rng_.chance(1, 4)) ? Polarity::Negative
                                                                     : Polarity::Positive;
    return ground(p, entity(), pol);
  }

  std::optional<Predicate> condition_predicate(const Predicate& head, bool negated) {
    std::vector<Predicate> options;
    for (const auto& p : vocab_.predicates) {
      int r = vocab_.rank.at(p), h = vocab_.rank.at(head);
      if (negated ? r < h : r <= h) options.push_back(p);
    }
    if (options.empty()) return std::nullopt;
    return options[rng_.below(options.size())];
  }

  Rule random_rule() {
    const Predicate& head = vocab_.predicates[rng_.below(vocab_.predicates.size())];
    bool var_head = rng_.chance(4, 5);
    Rule r;
    int n = 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec_.max_antecedents)));
    for (int i = 0; i < n; ++i) {
      bool negated = negation() && rng_.chance(1, 4);
      auto p = condition_predicate(head, negated);
      if (!p) {
        negated = false;
        p = condition_predicate(head, false);
      }
      Polarity pol = negated ? Polarity::Negative : Polarity::Positive;
      // The first condition carries the variable whenever the conclusion does.
      bool use_var = (var_head && i == 0) || rng_.chance(2, 3);
      r.antecedents.push_back(use_var ? with_variable(*p, pol) : ground(*p, entity(), pol));
    }
    Polarity head_pol = (open_world() && negation() && rng_.chance(1, 4)) ? Polarity::Negative
                                                                          : Polarity::Positive;
    bool body_var = std::any_of(r.antecedents.begin(), r.antecedents.end(),
                                [](const Literal& l) { return l.has_variable(); });
    r.consequent = (var_head && body_var) ? with_variable(head, head_pol)
                                          : ground(head, entity(), head_pol);
    return r;
  }

  // Facts and rules deriving chain[d](e) at depth d along chain[0..d].
  void plant_chain(const std::vector<Predicate>& chain, const Entity& e, std::vector<Literal>& facts,
                   std::vector<Rule>& rules) {
    facts.push_back(Literal{chain[0], {e}, Polarity::Positive});
    for (std::size_t i = 1; i < chain.size(); ++i) {
      Rule r;
      r.antecedents.push_back(Literal{chain[i - 1], {Variable{}}, Polarity::Positive});
      int extra = static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec_.max_antecedents)));
      for (int k = 0; k < extra; ++k) {
        bool negated = negation() && rng_.chance(1, 3);
        auto p = condition_predicate(chain[i], negated);
        if (!p || *p == chain[i]) continue;
        Polarity pol = negated ? Polarity::Negative : Polarity::Positive;
        Literal cond = with_variable(*p, pol);
        Literal support = cond.bind(e);
        if (std::find(r.antecedents.begin(), r.antecedents.end(), cond) != r.antecedents.end()) continue;
        r.antecedents.push_back(cond);
        // Closed-world negated conditions hold unless derived; everything
        // else needs a supporting fact.
        if (!negated || open_world()) facts.push_back(support);
      }
      bool last = i + 1 == chain.size();
      Polarity pol = (last && open_world() && negation() && rng_.chance(1, 3)) ? Polarity::Negative
                                                                               : Polarity::Positive;
      r.consequent = Literal{chain[i], {Variable{}}, pol};
      rules.push_back(std::move(r));
    }
  }

  // Random theory with an optional planted chain of the given depth.
  Theory build(int chain_depth) {
    std::vector<Literal> facts;
    std::vector<Rule> rules;
    if (chain_depth > 0) {
      std::vector<Predicate> attrs = vocab_.attributes_by_rank();
      std::vector<std::size_t> picks(attrs.size());
      for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
      rng_.shuffle(picks);
      picks.resize(static_cast<std::size_t>(chain_depth) + 1);
      std::sort(picks.begin(), picks.end());
      std::vector<Predicate> chain;
      for (std::size_t i : picks) chain.push_back(attrs[i]);
      target_chain_end_ = Literal{chain.back(), {entity()}, Polarity::Positive};
      plant_chain(chain, std::get<Entity>(target_chain_end_->args[0]), facts, rules);
      if (rules.back().consequent.polarity == Polarity::Negative) {
        target_chain_end_ = target_chain_end_->complement();
      }
    } else {
      target_chain_end_.reset();
    }
    int n_facts = spec_.entities + static_cast<int>(rng_.below(static_cast<std::uint64_t>(spec_.entities) + 1));
    for (int i = 0; i < n_facts; ++i) facts.push_back(random_fact());
    int n_rules = std::max(0, spec_.rules - chain_depth);
    for (int i = 0; i < n_rules; ++i) rules.push_back(random_rule());
    rng_.shuffle(facts);
    rng_.shuffle(rules);

    Theory t;
    std::set<Literal> seen;
    for (auto& f : facts) {
      if (!seen.insert(f).second) continue;
      t.facts.push_back(Fact{"F" + std::to_string(t.facts.size() + 1), f});
    }
    for (auto& r : rules) {
      r.id = "R" + std::to_string(t.rules.size() + 1);
      t.rules.push_back(std::move(r));
    }
    return t;
  }

  const std::optional<Literal>& chain_end() const { return target_chain_end_; }

 private:
  const GeneratorSpec& spec_;
  Rng& rng_;
  Vocabulary vocab_;
  std::optional<Literal> target_chain_end_;
};

std::optional<Closure> try_closure(const Theory& t, WorldAssumption wa) {
  try {
    return closure(t, wa);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Ground literals over the theory's own vocabulary.
std::vector<Literal> ground_literals(const Theory& t) {
  std::vector<Literal> out;
  auto entities = t.entities();
  for (const auto& p : t.predicates()) {
    for (const auto& a : entities) {
      if (p.arity == 1) {
        out.push_back(Literal{p, {a}, Polarity::Positive});
      } else {
        for (const auto& b : entities) out.push_back(Literal{p, {a, b}, Polarity::Positive});
      }
    }
  }
  return out;
}

enum class Kind { Derived, Unknown, Failure };

struct Request {
  Kind kind;
  int depth_or_bucket;
  bool want_true;
};

std::optional<Example> attempt(const GeneratorSpec& spec, const Request& req, Rng& rng) {
  TheoryBuilder builder(spec, rng);
  int max_chain = std::min(kMaxDepth, spec.attributes - 1);
  int chain = req.kind == Kind::Derived
                  ? req.depth_or_bucket
                  : static_cast<int>(rng.below(static_cast<std::uint64_t>(max_chain) + 1));
  Theory t = builder.build(chain);
  auto c = try_closure(t, spec.assumption);
  if (!c) return std::nullopt;

  Example e;
  e.assumption = spec.assumption;
  e.split = spec.split;
  e.theory = t;
  if (req.kind == Kind::Derived) {
    const int d = req.depth_or_bucket;
    std::optional<Literal> pick;
    if (builder.chain_end()) {
      const Derivation* got = c->find(*builder.chain_end());
      if (got && got->depth == d) pick = *builder.chain_end();
    }
    if (!pick) {
      std::vector<Literal> at_depth;
      for (const auto& [lit, der] : c->derived()) {
        if (der.depth == d) at_depth.push_back(lit);
      }
      if (at_depth.empty()) return std::nullopt;
      pick = at_depth[rng.below(at_depth.size())];
    }
    e.conclusion = req.want_true ? *pick : pick->complement();
    e.bucket = bucket_for_depth(d);
  } else {
    std::vector<Literal> open;
    for (const auto& l : ground_literals(t)) {
      if (req.kind == Kind::Unknown ? (!c->contains(l) && !c->contains(l.complement()))
                                    : !c->contains(l)) {
        open.push_back(l);
      }
    }
    if (open.empty()) return std::nullopt;
    Literal l = open[rng.below(open.size())];
    if (req.kind == Kind::Unknown) {
      e.conclusion = rng.chance(1, 3) ? l.complement() : l;
    } else {
      // Closed-world failure: a positive conclusion is False, its negation True.
      e.conclusion = req.want_true ? l.complement() : l;
    }
    e.bucket = req.depth_or_bucket;
  }
  Verdict v = verdict(*c, e.conclusion);
  e.gold_label = v.value;
  e.gold_depth = v.depth;
  switch (req.kind) {
    case Kind::Derived:
      if (e.gold_depth != req.depth_or_bucket) return std::nullopt;
      if ((e.gold_label == TruthValue::True) != req.want_true) return std::nullopt;
      break;
    case Kind::Unknown:
      if (e.gold_label != TruthValue::Unknown) return std::nullopt;
      break;
    case Kind::Failure:
      if (e.gold_depth || (e.gold_label == TruthValue::True) != req.want_true) return std::nullopt;
      break;
  }
  return e;
}

std::string make_id(const std::string& prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", n);
  return prefix + "-" + buf;
}

}  // namespace

void validate_spec(const GeneratorSpec& spec) {
  auto bad = [](const std::string& why) { throw UsageError("invalid generator spec: " + why); };
  if (spec.entities < 1 || spec.entities > kMaxEntities) bad("entities must be in 1..16");
  if (spec.attributes < 1 || spec.attributes > kMaxAttributes) bad("attributes must be in 1..16");
  if (spec.relations < 0 || spec.relations > kMaxRelations) bad("relations must be in 0..6");
  if (spec.rules < 0) bad("rules must be non-negative");
  if (spec.max_antecedents < 1 || spec.max_antecedents > 4) bad("max antecedents must be in 1..4");
  if (spec.attempts_per_example < 1) bad("attempts per example must be positive");
  for (const auto& [d, n] : spec.depth_quota) {
    if (d < 0 || d > kMaxDepth) bad("quota depth " + std::to_string(d) + " outside 0..5");
    if (n < 0) bad("negative quota");
    if (n > 0 && d + 1 > spec.attributes) bad("depth " + std::to_string(d) + " needs more attributes");
  }
  auto check_buckets = [&](const std::map<int, int>& q) {
    for (const auto& [b, n] : q) {
      if (std::find(std::begin(kBuckets), std::end(kBuckets), b) == std::end(kBuckets)) {
        bad("unknown bucket " + std::to_string(b));
      }
      if (n < 0) bad("negative quota");
    }
  };
  check_buckets(spec.unknown_quota);
  check_buckets(spec.failure_quota);
  auto total = [](const std::map<int, int>& q) {
    int n = 0;
    for (const auto& [k, v] : q) n += v;
    return n;
  };
  if (spec.assumption == WorldAssumption::CWA && total(spec.unknown_quota) > 0) {
    bad("Unknown examples cannot exist under the closed-world assumption");
  }
  if (spec.assumption == WorldAssumption::OWA && total(spec.failure_quota) > 0) {
    bad("closed-world failure examples need the closed-world assumption");
  }
}

Theory random_theory(const GeneratorSpec& spec, Rng& rng) {
  validate_spec(spec);
  TheoryBuilder builder(spec, rng);
  return builder.build(0);
}

Corpus generate(const GeneratorSpec& spec) {
  validate_spec(spec);
  std::vector<Request> requests;
  for (const auto& [d, n] : spec.depth_quota) {
    for (int i = 0; i < n; ++i) requests.push_back({Kind::Derived, d, i % 2 == 0});
  }
  for (const auto& [b, n] : spec.unknown_quota) {
    for (int i = 0; i < n; ++i) requests.push_back({Kind::Unknown, b, false});
  }
  for (const auto& [b, n] : spec.failure_quota) {
    for (int i = 0; i < n; ++i) requests.push_back({Kind::Failure, b, i % 2 == 1});
  }

  Corpus corpus;
  corpus.name = spec.name;
  Rng rng(spec.seed);
  std::set<int> buckets;
  for (const auto& req : requests) {
    std::optional<Example> e;
    for (int tries = 0; tries < spec.attempts_per_example && !e; ++tries) e = attempt(spec, req, rng);
    if (!e) {
      std::string what = req.kind == Kind::Derived ? "depth " + std::to_string(req.depth_or_bucket)
                         : req.kind == Kind::Unknown ? "Unknown in " + bucket_name(req.depth_or_bucket)
                                                     : "closed-world failure in " +
                                                           bucket_name(req.depth_or_bucket);
      throw GenerationError("could not generate an example (" + what + ") within " +
                            std::to_string(spec.attempts_per_example) + " attempts");
    }
    e->id = make_id(spec.id_prefix, corpus.examples.size() + 1);
    buckets.insert(e->bucket);
    corpus.examples.push_back(std::move(*e));
  }
  if (buckets.size() == 1) corpus.bucket = *buckets.begin();
  return corpus;
}

}  // namespace htp
