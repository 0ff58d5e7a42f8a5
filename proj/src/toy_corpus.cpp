#include "semidial/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>

#include "semidial/error.hpp"

namespace semidial {

namespace {

struct SlotDef {
  std::string slot;
  std::vector<std::string> values;
  std::vector<std::string> phrases;  // "{v}" marks the value
  std::string question;
};

struct DomainDef {
  std::string name;
  std::vector<SlotDef> slots;
  std::vector<std::string> requestables;
  std::string offer;  // delexicalized
};

const std::vector<std::string> kAreas = {"centre", "north", "south", "east", "west"};
const std::vector<std::string> kPrices = {"cheap", "moderate", "expensive"};

const std::vector<DomainDef>& domain_defs() {
  static const std::vector<DomainDef> defs = [] {
    const std::vector<std::string> price_phrases = {"in the {v} price range", "that is {v}",
                                                    "with {v} prices"};
    const std::vector<std::string> area_phrases = {"in the {v}", "in the {v} of town",
                                                   "located in the {v}"};
    std::vector<DomainDef> d;
    d.push_back({"restaurant",
                 {{"food",
                   {"italian", "chinese", "indian", "european", "british", "thai", "french",
                    "japanese", "mexican", "korean", "spanish", "turkish"},
                   {"serving {v} food", "that serves {v} food", "with {v} food"},
                   "what type of food would you like ?"},
                  {"pricerange", kPrices, price_phrases,
                   "what price range would you like for the restaurant ?"},
                  {"area", kAreas, area_phrases, "which area should the restaurant be in ?"}},
                 {"phone", "postcode", "address"},
                 "[value_name] is a [value_pricerange] restaurant serving [value_food] food in "
                 "the [value_area] ."});
    d.push_back({"hotel",
                 {{"pricerange", kPrices, price_phrases,
                   "what price range would you like for the hotel ?"},
                  {"area", kAreas, area_phrases, "which area should the hotel be in ?"},
                  {"stars",
                   {"1", "2", "3", "4", "5"},
                   {"with {v} stars", "rated {v} stars", "that has {v} stars"},
                   "how many stars should the hotel have ?"}},
                 {"phone", "postcode", "address"},
                 "[value_name] is a [value_pricerange] [value_stars] star hotel in the "
                 "[value_area] ."});
    d.push_back({"attraction",
                 {{"type",
                   {"museum", "park", "theatre", "gallery", "cinema", "nightclub", "college",
                    "swimmingpool"},
                   {"that is a {v}", "of type {v}", "like a {v}"},
                   "what type of attraction are you interested in ?"},
                  {"area", kAreas, area_phrases, "which area should the attraction be in ?"}},
                 {"phone", "postcode", "address", "fee"},
                 "[value_name] is a [value_type] in the [value_area] ."});
    return d;
  }();
  return defs;
}

const DomainDef& domain_def(std::string_view name) {
  for (const auto& d : domain_defs()) {
    if (d.name == name) return d;
  }
  throw ConfigError("toy corpus: unknown domain '" + std::string(name) + "'");
}

std::string request_words(std::string_view slot) {
  if (slot == "phone") return "phone number";
  if (slot == "fee") return "entrance fee";
  return std::string(slot);
}

const std::vector<std::string> kOpeners = {"i am looking for a {d}", "i need a {d}",
                                           "can you find me a {d}", "i would like a {d}",
                                           "please help me find a {d}"};
const std::vector<std::string> kSecondOpeners = {"i also need a {d}", "i am also looking for a {d}",
                                                 "now i need a {d} too"};
const std::vector<std::string> kAnswers = {"i would like a {d} {p}", "i want the {d} {p}",
                                           "the {d} should be {p}", "a {d} {p} please"};
const std::vector<std::string> kChanges = {"how about a {d} {p} instead", "then try a {d} {p}",
                                           "ok , what about a {d} {p}"};
const std::vector<std::string> kRequests = {"what is the {r} of the {d} ?",
                                            "can i get the {r} of the {d} ?",
                                            "could you tell me the {r} ?"};
const std::vector<std::string> kByes = {"thank you , goodbye .", "thanks , that is all .",
                                        "great , bye ."};

const std::vector<std::string> kNameFirst = {
    "golden", "royal", "little", "old", "blue", "green", "red", "silver", "grand", "lucky",
    "happy", "crown", "river", "garden", "city", "bridge", "castle", "kings", "queens", "white"};
const std::vector<std::string> kNameSecond = {
    "dragon", "lion", "house", "star", "palace", "oak", "rose", "swan", "tower", "anchor",
    "bell", "lodge", "court", "inn", "moon", "harbour", "mill", "arms", "view", "square"};
const std::vector<std::string> kStreets = {"mill", "hills", "regent", "station", "park",
                                           "market", "church", "bridge", "castle", "trinity"};

std::string fill(std::string text, std::string_view key, std::string_view value) {
  const std::string marker = "{" + std::string(key) + "}";
  if (!value.empty() && std::string_view("aeiou").find(value.front()) != std::string_view::npos) {
    const std::string article = "a " + marker;
    for (auto pos = text.find(article); pos != std::string::npos; pos = text.find(article, pos + 2)) {
      if (pos == 0 || text[pos - 1] == ' ') text.insert(pos + 1, "n");
    }
  }
  for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker)) {
    text.replace(pos, marker.size(), value);
  }
  return text;
}

class Generator {
 public:
  Generator(const ToyCorpusSpec& spec, const Ontology& ontology)
      : spec_(spec), ontology_(ontology), rng_(spec.seed) {}

  EntityDB make_db();
  Dialogue make_dialogue(std::size_t index, const EntityDB& db);

 private:
  struct Segment {
    const DomainDef* def;
    std::map<std::string, std::string> goal;
    std::vector<std::string> requests;
    std::optional<std::pair<std::string, std::string>> wrong;  // slot, unavailable value
  };

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng_)];
  }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::size_t zipf(std::size_t n);

  Segment make_segment(const DomainDef& def, const EntityDB& db);
  void run_segment(const Segment& seg, bool first, const EntityDB& db, Dialogue& out);
  TurnLabels empty_labels() const;
  std::string phrase(const DomainDef& def, const std::string& slot, const std::string& value);

  const ToyCorpusSpec& spec_;
  const Ontology& ontology_;
  std::mt19937_64 rng_;
};

std::size_t Generator::zipf(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 1.0 / std::pow(static_cast<double>(k + 1), spec_.zipf_exponent);
  }
  return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng_);
}

EntityDB Generator::make_db() {
  EntityDB db;
  std::vector<std::pair<std::string, std::string>> names;
  for (const auto& a : kNameFirst) {
    for (const auto& b : kNameSecond) names.emplace_back(a, b);
  }
  std::shuffle(names.begin(), names.end(), rng_);
  std::size_t next_name = 0;
  for (const auto& domain : spec_.domains) {
    const DomainDef& def = domain_def(domain);
    for (std::size_t i = 0; i < spec_.entities_per_domain; ++i) {
      Entity e;
      char id[64];
      std::snprintf(id, sizeof id, "%s-%03zu", domain.c_str(), i);
      e.id = id;
      e.domain = domain;
      const auto& [first, second] = names.at(next_name++);
      e.fields["name"] = first + " " + second;
      for (const auto& slot : def.slots) {
        e.fields[slot.slot] = slot.values[zipf(slot.values.size())];
      }
      std::uniform_int_distribution<int> digit(0, 9);
      std::string phone = "01223";
      for (int k = 0; k < 6; ++k) phone += static_cast<char>('0' + digit(rng_));
      e.fields["phone"] = phone;
      std::string postcode = "cb";
      postcode += static_cast<char>('1' + digit(rng_) % 5);
      postcode += static_cast<char>('0' + digit(rng_));
      postcode += static_cast<char>('a' + digit(rng_));
      postcode += static_cast<char>('a' + digit(rng_));
      e.fields["postcode"] = postcode;
      e.fields["address"] = std::to_string(1 + digit(rng_) * 10 + digit(rng_)) + " " +
                            pick(kStreets) + " road";
      if (std::find(def.requestables.begin(), def.requestables.end(), "fee") !=
          def.requestables.end()) {
        e.fields["fee"] = coin(0.5) ? "free" : std::to_string(2 + digit(rng_)) + " pounds";
      }
      db.add(std::move(e));
    }
  }
  return db;
}

TurnLabels Generator::empty_labels() const {
  TurnLabels l;
  l.informable.assign(ontology_.informable().size(), kNotMentioned);
  l.requestable.assign(ontology_.requestable().size(), 0);
  return l;
}

std::string Generator::phrase(const DomainDef& def, const std::string& slot,
                              const std::string& value) {
  for (const auto& s : def.slots) {
    if (s.slot == slot) return fill(pick(s.phrases), "v", value);
  }
  throw ContractError("toy corpus: no slot " + slot);
}

Generator::Segment Generator::make_segment(const DomainDef& def, const EntityDB& db) {
  Segment seg;
  seg.def = &def;
  const Entity& target = pick(db.records(def.name));
  for (const auto& s : def.slots) seg.goal[s.slot] = *target.field(s.slot);
  for (const auto& r : def.requestables) {
    if (coin(spec_.request_probability)) seg.requests.push_back(r);
  }
  if (coin(spec_.change_probability)) {
    std::vector<std::pair<std::string, std::string>> options;
    for (const auto& s : def.slots) {
      for (const auto& v : s.values) {
        if (v == seg.goal[s.slot]) continue;
        auto alt = seg.goal;
        alt[s.slot] = v;
        if (db.match(def.name, alt).empty()) options.emplace_back(s.slot, v);
      }
    }
    if (!options.empty()) seg.wrong = pick(options);
  }
  return seg;
}

void Generator::run_segment(const Segment& seg, bool first, const EntityDB& db, Dialogue& out) {
  const DomainDef& def = *seg.def;
  const std::string& D = def.name;
  std::map<std::string, std::string> informed;
  bool wrong_used = false;

  auto value_for = [&](const std::string& slot) {
    if (seg.wrong && seg.wrong->first == slot && !wrong_used) {
      wrong_used = true;
      return seg.wrong->second;
    }
    return seg.goal.at(slot);
  };
  auto label_inform = [&](TurnLabels& labels, const std::string& slot, const std::string& value) {
    const auto s = *ontology_.informable_index(D, slot);
    labels.informable[s] = *ontology_.value_index(s, value);
    informed[slot] = value;
  };
  auto first_unfilled = [&]() -> std::optional<std::string> {
    for (const auto& s : def.slots) {
      if (!informed.count(s.slot)) return s.slot;
    }
    return std::nullopt;
  };

  // Opening turn: a random non-empty subset of the goal. A user who starts
  // with an unavailable value states the full goal, so that the database
  // rejects it before anything is offered.
  std::vector<std::string> opening;
  for (const auto& s : def.slots) {
    if (coin(0.5) || seg.wrong) opening.push_back(s.slot);
  }
  if (opening.empty()) opening.push_back(pick(def.slots).slot);

  Turn turn;
  turn.domain = D;
  turn.labels = empty_labels();
  {
    std::vector<std::string> parts;
    for (const auto& slot : opening) {
      const std::string v = value_for(slot);
      parts.push_back(phrase(def, slot, v));
      label_inform(*turn.labels, slot, v);
    }
    std::string text = fill(pick(first ? kOpeners : kSecondOpeners), "d", D);
    for (std::size_t i = 0; i < parts.size(); ++i) text += (i ? " and " : " ") + parts[i];
    turn.user_tokens = tokenize(text + " .");
  }

  std::vector<std::string> pending = seg.requests;
  bool offered = false;
  for (int guard = 0; guard < 32; ++guard) {
    // System response to the current user turn.
    const std::size_t matches = db.match(D, informed).size();
    std::string system;
    enum class Act { nomatch, ask, offer, answer } act;
    std::string asked;
    const bool requesting = std::any_of(turn.labels->requestable.begin(),
                                        turn.labels->requestable.end(), [](int r) { return r == 1; });
    if (matches == 0) {
      act = Act::nomatch;
      system = "sorry , there is no " + D + " matching your request . would you like something else ?";
    } else if (auto slot = first_unfilled(); slot && matches > 1) {
      act = Act::ask;
      asked = *slot;
      for (const auto& s : def.slots) {
        if (s.slot == asked) system = s.question;
      }
    } else if (requesting) {
      act = Act::answer;
      std::vector<std::string> parts;
      for (std::size_t r = 0; r < ontology_.requestable().size(); ++r) {
        if (turn.labels->requestable[r] == 1) {
          const std::string& slot = ontology_.requestable()[r].slot;
          parts.push_back("the " + request_words(slot) + " is " + placeholder(slot));
        }
      }
      system = "";
      for (std::size_t i = 0; i < parts.size(); ++i) system += (i ? " and " : "") + parts[i];
      system += " .";
    } else {
      act = Act::offer;
      system = def.offer;
      offered = true;
    }
    turn.system_tokens = tokenize(system);
    out.turns.push_back(std::move(turn));

    // Next user turn.
    turn = Turn{};
    turn.domain = D;
    turn.labels = empty_labels();
    if (act == Act::nomatch) {
      const std::string& slot = seg.wrong ? seg.wrong->first : def.slots.front().slot;
      const std::string v = seg.goal.at(slot);
      label_inform(*turn.labels, slot, v);
      turn.user_tokens = tokenize(fill(fill(pick(kChanges), "d", D), "p", phrase(def, slot, v)) + " ?");
      continue;
    }
    if (act == Act::ask) {
      std::vector<std::string> slots = {asked};
      for (const auto& s : def.slots) {
        if (s.slot != asked && !informed.count(s.slot) && coin(0.3)) slots.push_back(s.slot);
      }
      std::string p;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const std::string v = value_for(slots[i]);
        p += (i ? " and " : "") + phrase(def, slots[i], v);
        label_inform(*turn.labels, slots[i], v);
      }
      turn.user_tokens = tokenize(fill(fill(pick(kAnswers), "d", D), "p", p) + " .");
      continue;
    }
    if (offered && !pending.empty()) {
      std::vector<std::string> now;
      if (coin(0.5)) {
        now = pending;
        pending.clear();
      } else {
        now.push_back(pending.front());
        pending.erase(pending.begin());
      }
      std::string r;
      for (std::size_t i = 0; i < now.size(); ++i) {
        r += (i ? " and " : "") + request_words(now[i]);
        turn.labels->requestable[*ontology_.requestable_index(D, now[i])] = 1;
      }
      turn.user_tokens = tokenize(fill(fill(pick(kRequests), "d", D), "r", r));
      continue;
    }
    return;  // segment finished; the caller opens the next one or says goodbye
  }
  throw ContractError("toy corpus: dialogue did not terminate");
}

Dialogue Generator::make_dialogue(std::size_t index, const EntityDB& db) {
  Dialogue d;
  char id[32];
  std::snprintf(id, sizeof id, "toy-%04zu", index);
  d.id = id;
  std::vector<std::string> domains = {pick(spec_.domains)};
  if (spec_.domains.size() > 1 && coin(spec_.multi_domain_probability)) {
    std::string second;
    do {
      second = pick(spec_.domains);
    } while (second == domains.front());
    domains.push_back(second);
  }
  d.domains = domains;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const DomainDef& def = domain_def(domains[i]);
    Segment seg = make_segment(def, db);
    for (const auto& s : def.slots) d.goal.constraints.push_back({def.name, s.slot, seg.goal[s.slot]});
    for (const auto& r : seg.requests) d.goal.requests.push_back({def.name, r});
    run_segment(seg, i == 0, db, d);
  }
  Turn bye;
  bye.domain = domains.back();
  bye.labels = empty_labels();
  bye.user_tokens = tokenize(pick(kByes));
  bye.system_tokens = tokenize("you are welcome . goodbye .");
  d.turns.push_back(std::move(bye));
  return d;
}

}  // namespace

void ToyCorpusSpec::validate() const {
  if (dialogues == 0) throw ConfigError("toy corpus: dialogues must be at least 1");
  if (domains.empty()) throw ConfigError("toy corpus: at least one domain is required");
  std::set<std::string> seen;
  for (const auto& d : domains) {
    domain_def(d);
    if (!seen.insert(d).second) throw ConfigError("toy corpus: duplicate domain '" + d + "'");
  }
  if (entities_per_domain == 0) throw ConfigError("toy corpus: entities_per_domain must be positive");
  if (entities_per_domain * domains.size() > kNameFirst.size() * kNameSecond.size()) {
    throw ConfigError("toy corpus: too many entities for the name pool");
  }
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("toy corpus: ") + what + " must lie in [0, 1]");
  };
  prob(change_probability, "change_probability");
  prob(multi_domain_probability, "multi_domain_probability");
  prob(request_probability, "request_probability");
  prob(valid_fraction, "valid_fraction");
  prob(test_fraction, "test_fraction");
  if (valid_fraction + test_fraction >= 1.0) {
    throw ConfigError("toy corpus: valid_fraction + test_fraction must be below 1");
  }
  if (!(zipf_exponent >= 0.0)) throw ConfigError("toy corpus: zipf_exponent must be >= 0");
}

Json ToyCorpusSpec::to_json() const {
  return Json{{"dialogues", dialogues},
              {"seed", seed},
              {"domains", domains},
              {"entities_per_domain", entities_per_domain},
              {"zipf_exponent", zipf_exponent},
              {"change_probability", change_probability},
              {"multi_domain_probability", multi_domain_probability},
              {"request_probability", request_probability},
              {"valid_fraction", valid_fraction},
              {"test_fraction", test_fraction}};
}

ToyCorpusSpec ToyCorpusSpec::from_json(const Json& j) {
  ToyCorpusSpec s;
  try {
    s.dialogues = j.value("dialogues", s.dialogues);
    s.seed = j.value("seed", s.seed);
    s.domains = j.value("domains", s.domains);
    s.entities_per_domain = j.value("entities_per_domain", s.entities_per_domain);
    s.zipf_exponent = j.value("zipf_exponent", s.zipf_exponent);
    s.change_probability = j.value("change_probability", s.change_probability);
    s.multi_domain_probability = j.value("multi_domain_probability", s.multi_domain_probability);
    s.request_probability = j.value("request_probability", s.request_probability);
    s.valid_fraction = j.value("valid_fraction", s.valid_fraction);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("toy corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

Ontology toy_ontology(const std::vector<std::string>& domains) {
  Ontology o;
  for (const auto& name : domains) {
    const DomainDef& def = domain_def(name);
    o.add_domain(def.name);
    for (const auto& s : def.slots) o.add_informable(def.name, s.slot, s.values);
    for (const auto& r : def.requestables) o.add_requestable(def.name, r);
  }
  return o;
}

ToyData generate_toy_corpus(const ToyCorpusSpec& spec) {
  spec.validate();
  Ontology ontology = toy_ontology(spec.domains);
  Generator gen(spec, ontology);
  EntityDB db = gen.make_db();

  std::vector<Dialogue> dialogues;
  dialogues.reserve(spec.dialogues);
  for (std::size_t i = 0; i < spec.dialogues; ++i) {
    dialogues.push_back(gen.make_dialogue(i, db));
  }

  std::vector<std::size_t> order(dialogues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 split_rng(spec.seed + 1);
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n = static_cast<double>(dialogues.size());
  const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    Split s = Split::train;
    if (k < n_valid) {
      s = Split::valid;
    } else if (k < n_valid + n_test) {
      s = Split::test;
    }
    dialogues[order[k]].split = s;
  }
  return {Corpus(std::move(ontology), std::move(dialogues)), std::move(db)};
}

}  // namespace semidial
