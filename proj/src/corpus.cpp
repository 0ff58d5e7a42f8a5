#include "semidial/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "semidial/error.hpp"

namespace semidial {

namespace {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open " + path.string());
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case '?': case '!': case ';': case ':':
    case '"': case '(': case ')':
      return true;
    default:
      return false;
  }
}

[[noreturn]] void dialogue_error(const std::string& id, const std::string& field,
                                 const std::string& what) {
  throw LoadError("dialogue '" + id + "', field '" + field + "': " + what);
}

}  // namespace

std::string normalize_value(std::string_view value) {
  std::string v(value);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::set<std::string> not_mentioned = {"not-mentioned", "not mentioned",
                                                      "not-mention", "none", ""};
  static const std::set<std::string> dont_care = {"dont-care", "dontcare", "don't care",
                                                  "dont care", "do n't care", "don't-care"};
  if (not_mentioned.count(v)) {
    return std::string(kNotMentionedValue);
  }
  if (dont_care.count(v)) {
    return std::string(kDontCareValue);
  }
  return v;
}

// ---------------------------------------------------------------- Ontology

void Ontology::add_domain(const std::string& domain) {
  if (domain.empty()) {
    throw LoadError("ontology: empty domain name");
  }
  if (!domain_index(domain)) {
    domains_.push_back(domain);
  }
}

void Ontology::add_informable(const std::string& domain, const std::string& slot,
                              const std::vector<std::string>& values) {
  add_domain(domain);
  if (informable_index(domain, slot)) {
    throw LoadError("ontology: duplicate informable slot " + domain + "-" + slot);
  }
  InformableSlot s{domain, slot, {std::string(kNotMentionedValue), std::string(kDontCareValue)}};
  for (const auto& raw : values) {
    std::string v = normalize_value(raw);
    if (v == kNotMentionedValue || v == kDontCareValue) {
      continue;
    }
    if (std::find(s.values.begin(), s.values.end(), v) != s.values.end()) {
      throw LoadError("ontology: duplicate value '" + v + "' for " + domain + "-" + slot);
    }
    s.values.push_back(std::move(v));
  }
  if (s.values.size() < 3) {
    throw LoadError("ontology: slot " + domain + "-" + slot + " has no concrete values");
  }
  informable_.push_back(std::move(s));
}

void Ontology::add_requestable(const std::string& domain, const std::string& slot) {
  add_domain(domain);
  if (requestable_index(domain, slot)) {
    throw LoadError("ontology: duplicate requestable slot " + domain + "-" + slot);
  }
  requestable_.push_back({domain, slot});
}

std::optional<std::size_t> Ontology::domain_index(std::string_view domain) const {
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i] == domain) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> Ontology::informable_index(std::string_view domain,
                                                      std::string_view slot) const {
  for (std::size_t i = 0; i < informable_.size(); ++i) {
    if (informable_[i].domain == domain && informable_[i].slot == slot) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> Ontology::requestable_index(std::string_view domain,
                                                       std::string_view slot) const {
  for (std::size_t i = 0; i < requestable_.size(); ++i) {
    if (requestable_[i].domain == domain && requestable_[i].slot == slot) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<int> Ontology::value_index(std::size_t slot, std::string_view value) const {
  const auto& values = informable_.at(slot).values;
  const std::string v = normalize_value(value);
  auto it = std::find(values.begin(), values.end(), v);
  if (it == values.end()) {
    return std::nullopt;
  }
  return static_cast<int>(it - values.begin());
}

const std::string& Ontology::value(std::size_t slot, int index) const {
  return informable_.at(slot).values.at(static_cast<std::size_t>(index));
}

std::vector<std::size_t> Ontology::informable_of(std::string_view domain) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < informable_.size(); ++i) {
    if (informable_[i].domain == domain) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> Ontology::requestable_of(std::string_view domain) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < requestable_.size(); ++i) {
    if (requestable_[i].domain == domain) {
      out.push_back(i);
    }
  }
  return out;
}

std::size_t Ontology::belief_size() const {
  std::size_t n = 0;
  for (const auto& s : informable_) {
    n += s.values.size();
  }
  return n;
}

Ontology Ontology::from_json(const Json& j) {
  Ontology o;
  try {
    if (!j.contains("informable") || !j.at("informable").is_object()) {
      throw LoadError("ontology: missing 'informable' object");
    }
    for (const auto& [domain, slots] : j.at("informable").items()) {
      o.add_domain(domain);
      for (const auto& [slot, values] : slots.items()) {
        o.add_informable(domain, slot, values.get<std::vector<std::string>>());
      }
    }
    if (j.contains("requestable")) {
      for (const auto& [domain, slots] : j.at("requestable").items()) {
        for (const auto& slot : slots) {
          o.add_requestable(domain, slot.get<std::string>());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("ontology: ") + e.what());
  }
  return o;
}

Ontology Ontology::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

Json Ontology::to_json() const {
  Json inf = Json::object();
  for (const auto& d : domains_) {
    inf[d] = Json::object();
  }
  for (const auto& s : informable_) {
    inf[s.domain][s.slot] = std::vector<std::string>(s.values.begin() + 2, s.values.end());
  }
  Json req = Json::object();
  for (const auto& r : requestable_) {
    if (!req.contains(r.domain)) {
      req[r.domain] = Json::array();
    }
    req[r.domain].push_back(r.slot);
  }
  return Json{{"informable", inf}, {"requestable", req}};
}

void Ontology::save(const std::filesystem::path& path) const { write_json_file(to_json(), path); }

// ------------------------------------------------------------------- Vocab

Vocab::Vocab() {
  add(std::string(kUnkToken));
  add(std::string(kBosToken));
  add(std::string(kEosToken));
}

Vocab::Vocab(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    add(t);
  }
  if (size() < 3 || token(kUnk) != kUnkToken || token(kBos) != kBosToken ||
      token(kEos) != kEosToken) {
    throw LoadError("vocabulary must start with <unk>, <bos>, <eos>");
  }
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    return it->second;
  }
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

const std::string& Vocab::token(int index) const {
  return tokens_.at(static_cast<std::size_t>(index));
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    out.push_back(index(t));
  }
  return out;
}

std::vector<std::string> Vocab::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) {
    out.push_back(token(id));
  }
  return out;
}

// -------------------------------------------------------------- tokenizer

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '[') {
      std::size_t close = text.find(']', i);
      if (close == std::string_view::npos) {
        cur.push_back(c);
        continue;
      }
      flush();
      std::string tok(text.substr(i, close - i + 1));
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      out.push_back(std::move(tok));
      i = close;
    } else if (is_split_punct(c)) {
      const bool numeric = (c == '.' || c == ',' || c == ':') && i > 0 && i + 1 < text.size() &&
                           std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]));
      if (numeric) {
        cur.push_back(c);
      } else {
        flush();
        out.emplace_back(1, c);
      }
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) {
      out.push_back(' ');
    }
    out += t;
  }
  return out;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid" || s == "val" || s == "dev") return Split::valid;
  if (s == "test") return Split::test;
  throw LoadError("unknown split '" + std::string(s) + "'");
}

// ------------------------------------------------------------------ Corpus

Corpus::Corpus(Ontology ontology, std::vector<Dialogue> dialogues)
    : ontology_(std::move(ontology)), dialogues_(std::move(dialogues)) {
  for (auto& d : dialogues_) {
    if (d.turns.empty()) {
      throw LoadError("dialogue '" + d.id + "' has no turns");
    }
    for (auto& t : d.turns) {
      if (t.user_tokens.empty()) {
        dialogue_error(d.id, "user", "empty user utterance");
      }
      if (t.system_tokens.empty() || t.system_tokens.back() != Vocab::kEosToken) {
        t.system_tokens.emplace_back(Vocab::kEosToken);
      }
      for (const auto& tok : t.user_tokens) vocab_.add(tok);
      for (const auto& tok : t.system_tokens) vocab_.add(tok);
      if (t.labels) {
        if (t.labels->informable.size() != ontology_.informable().size() ||
            t.labels->requestable.size() != ontology_.requestable().size()) {
          dialogue_error(d.id, "belief", "label vector does not match the ontology");
        }
      }
    }
  }
  for (auto& d : dialogues_) {
    for (auto& t : d.turns) {
      t.user_ids = vocab_.encode(t.user_tokens);
      t.system_ids = vocab_.encode(t.system_tokens);
    }
  }
}

std::vector<std::size_t> Corpus::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dialogues_.size(); ++i) {
    if (dialogues_[i].split == split) {
      out.push_back(i);
    }
  }
  return out;
}

Json Corpus::to_json() const {
  Json arr = Json::array();
  for (const auto& d : dialogues_) {
    Json cons = Json::array();
    for (const auto& c : d.goal.constraints) {
      cons.push_back({c.domain, c.slot, c.value});
    }
    Json reqs = Json::array();
    for (const auto& r : d.goal.requests) {
      reqs.push_back({r.domain, r.slot});
    }
    Json turns = Json::array();
    for (const auto& t : d.turns) {
      std::vector<std::string> sys(t.system_tokens.begin(), t.system_tokens.end() - 1);
      Json jt = {{"user", join_tokens(t.user_tokens)}, {"system", join_tokens(sys)}};
      if (!t.domain.empty()) {
        jt["domain"] = t.domain;
      }
      Json belief = Json::array();
      Json requested = Json::array();
      if (t.labels) {
        for (std::size_t s = 0; s < t.labels->informable.size(); ++s) {
          const int v = t.labels->informable[s];
          if (v != kNotMentioned) {
            const auto& slot = ontology_.informable()[s];
            belief.push_back({slot.domain, slot.slot, slot.values[static_cast<std::size_t>(v)]});
          }
        }
        for (std::size_t r = 0; r < t.labels->requestable.size(); ++r) {
          if (t.labels->requestable[r] != 0) {
            const auto& slot = ontology_.requestable()[r];
            requested.push_back({slot.domain, slot.slot});
          }
        }
      }
      jt["belief"] = belief;
      jt["requested"] = requested;
      jt["labelled"] = t.is_labelled();
      turns.push_back(std::move(jt));
    }
    arr.push_back({{"id", d.id},
                   {"domains", d.domains},
                   {"split", std::string(to_string(d.split))},
                   {"goal", {{"constraints", cons}, {"requests", reqs}}},
                   {"turns", turns}});
  }
  return Json{{"dialogues", arr}};
}

Corpus Corpus::from_json(const Json& j, Ontology ontology) {
  if (!j.is_object() || !j.contains("dialogues") || !j.at("dialogues").is_array()) {
    throw LoadError("corpus: missing 'dialogues' array");
  }
  std::vector<Dialogue> dialogues;
  std::set<std::string> seen_ids;
  std::size_t position = 0;
  for (const auto& jd : j.at("dialogues")) {
    Dialogue d;
    std::string id = "#" + std::to_string(position++);
    if (jd.contains("id") && jd.at("id").is_string()) {
      id = jd.at("id").get<std::string>();
    } else {
      dialogue_error(id, "id", "missing or not a string");
    }
    d.id = id;
    if (!seen_ids.insert(id).second) {
      dialogue_error(id, "id", "duplicate dialogue id");
    }
    auto require = [&](const char* field, bool ok) {
      if (!ok) {
        dialogue_error(id, field, "missing or wrong type");
      }
    };
    try {
      if (jd.contains("domains")) {
        require("domains", jd.at("domains").is_array());
        for (const auto& dom : jd.at("domains")) {
          std::string name = dom.get<std::string>();
          if (!ontology.domain_index(name)) {
            dialogue_error(id, "domains", "unknown domain '" + name + "'");
          }
          d.domains.push_back(name);
        }
      }
      if (jd.contains("split")) {
        d.split = split_from_string(jd.at("split").get<std::string>());
      }
      require("goal", jd.contains("goal") && jd.at("goal").is_object());
      const auto& jg = jd.at("goal");
      if (jg.contains("constraints")) {
        for (const auto& c : jg.at("constraints")) {
          require("goal.constraints", c.is_array() && c.size() == 3);
          GoalConstraint gc{c[0].get<std::string>(), c[1].get<std::string>(),
                            normalize_value(c[2].get<std::string>())};
          auto slot = ontology.informable_index(gc.domain, gc.slot);
          if (!slot) {
            dialogue_error(id, "goal.constraints",
                           "slot (" + gc.domain + ", " + gc.slot + ") not in ontology");
          }
          if (!ontology.value_index(*slot, gc.value)) {
            throw LoadError("dialogue '" + id + "': label value absent from ontology: (" +
                            gc.domain + ", " + gc.slot + ", \"" + gc.value + "\")");
          }
          d.goal.constraints.push_back(std::move(gc));
        }
      }
      if (jg.contains("requests")) {
        for (const auto& r : jg.at("requests")) {
          require("goal.requests", r.is_array() && r.size() == 2);
          GoalRequest gr{r[0].get<std::string>(), r[1].get<std::string>()};
          if (!ontology.requestable_index(gr.domain, gr.slot)) {
            dialogue_error(id, "goal.requests",
                           "slot (" + gr.domain + ", " + gr.slot + ") not in ontology");
          }
          d.goal.requests.push_back(std::move(gr));
        }
      }
      require("turns", jd.contains("turns") && jd.at("turns").is_array() &&
                           !jd.at("turns").empty());
      for (const auto& jt : jd.at("turns")) {
        Turn t;
        require("turns.user", jt.contains("user") && jt.at("user").is_string());
        t.user_tokens = tokenize(jt.at("user").get<std::string>());
        if (t.user_tokens.empty()) {
          dialogue_error(id, "turns.user", "empty user utterance");
        }
        require("turns.system", jt.contains("system") && jt.at("system").is_string());
        t.system_tokens = tokenize(jt.at("system").get<std::string>());
        t.system_tokens.emplace_back(Vocab::kEosToken);
        if (jt.contains("domain")) {
          t.domain = jt.at("domain").get<std::string>();
        }
        const bool labelled = jt.contains("labelled") ? jt.at("labelled").get<bool>() : true;
        if (labelled) {
          TurnLabels labels;
          labels.informable.assign(ontology.informable().size(), kNotMentioned);
          labels.requestable.assign(ontology.requestable().size(), 0);
          if (jt.contains("belief")) {
            for (const auto& b : jt.at("belief")) {
              require("turns.belief", b.is_array() && b.size() == 3);
              const auto dom = b[0].get<std::string>();
              const auto slot_name = b[1].get<std::string>();
              const auto value = b[2].get<std::string>();
              auto slot = ontology.informable_index(dom, slot_name);
              if (!slot) {
                dialogue_error(id, "turns.belief",
                               "slot (" + dom + ", " + slot_name + ") not in ontology");
              }
              auto v = ontology.value_index(*slot, value);
              if (!v) {
                throw LoadError("dialogue '" + id + "': label value absent from ontology: (" +
                                dom + ", " + slot_name + ", \"" + value + "\")");
              }
              labels.informable[*slot] = *v;
            }
          }
          if (jt.contains("requested")) {
            for (const auto& r : jt.at("requested")) {
              require("turns.requested", r.is_array() && r.size() == 2);
              const auto dom = r[0].get<std::string>();
              const auto slot_name = r[1].get<std::string>();
              auto idx = ontology.requestable_index(dom, slot_name);
              if (!idx) {
                dialogue_error(id, "turns.requested",
                               "slot (" + dom + ", " + slot_name + ") not in ontology");
              }
              labels.requestable[*idx] = 1;
            }
          }
          t.labels = std::move(labels);
        }
        d.turns.push_back(std::move(t));
      }
    } catch (const nlohmann::json::exception& e) {
      dialogue_error(id, "?", e.what());
    }
    dialogues.push_back(std::move(d));
  }
  return Corpus(std::move(ontology), std::move(dialogues));
}

Corpus load_corpus(const std::filesystem::path& path, const std::filesystem::path& ontology_path) {
  Ontology ontology = Ontology::load(ontology_path);
  return Corpus::from_json(read_json_file(path), std::move(ontology));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_json_file(corpus.to_json(), path);
}

Corpus split_labelled(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ContractError("labelled fraction must lie in [0, 1]");
  }
  auto train = corpus.indices(Split::train);
  std::mt19937_64 rng(seed);
  std::shuffle(train.begin(), train.end(), rng);
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
  std::vector<Dialogue> dialogues = corpus.dialogues();
  for (std::size_t k = keep; k < train.size(); ++k) {
    for (auto& t : dialogues[train[k]].turns) {
      t.labels.reset();
    }
  }
  return Corpus(corpus.ontology(), std::move(dialogues));
}

// ------------------------------------------------------- (de)lexicalization

const std::string* Entity::field(std::string_view slot) const {
  auto it = fields.find(std::string(slot));
  return it == fields.end() ? nullptr : &it->second;
}

std::string placeholder(std::string_view slot) { return "[value_" + std::string(slot) + "]"; }

std::optional<std::string> placeholder_slot(std::string_view token) {
  constexpr std::string_view prefix = "[value_";
  if (token.size() > prefix.size() + 1 && token.substr(0, prefix.size()) == prefix &&
      token.back() == ']') {
    return std::string(token.substr(prefix.size(), token.size() - prefix.size() - 1));
  }
  return std::nullopt;
}

std::vector<std::string> delexicalize(std::span<const std::string> tokens, const Entity& entity,
                                      const Ontology& ontology) {
  auto in_ontology = [&](const std::string& slot) {
    if (slot == "name") {
      return true;
    }
    for (const auto& s : ontology.informable()) {
      if (s.slot == slot && (entity.domain.empty() || s.domain == entity.domain)) return true;
    }
    for (const auto& s : ontology.requestable()) {
      if (s.slot == slot && (entity.domain.empty() || s.domain == entity.domain)) return true;
    }
    return false;
  };
  struct Pattern {
    std::vector<std::string> surface;
    std::string slot;
  };
  std::vector<Pattern> patterns;
  for (const auto& [slot, value] : entity.fields) {
    if (!in_ontology(slot)) {
      continue;
    }
    auto surface = tokenize(value);
    if (!surface.empty()) {
      patterns.push_back({std::move(surface), slot});
    }
  }
  // Longest surface forms first so "12 mill road" wins over "12".
  std::stable_sort(patterns.begin(), patterns.end(), [](const Pattern& a, const Pattern& b) {
    return a.surface.size() > b.surface.size();
  });
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool replaced = false;
    for (const auto& p : patterns) {
      if (i + p.surface.size() <= tokens.size() &&
          std::equal(p.surface.begin(), p.surface.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        out.push_back(placeholder(p.slot));
        i += p.surface.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) {
      out.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

std::vector<std::string> lexicalize(std::span<const std::string> tokens, const Entity& entity) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    auto slot = placeholder_slot(t);
    if (!slot) {
      out.push_back(t);
      continue;
    }
    const std::string* value = entity.field(*slot);
    if (value == nullptr) {
      throw GenerationError("no value for slot '" + *slot + "' in entity '" + entity.id + "'");
    }
    for (auto& v : tokenize(*value)) {
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace semidial
