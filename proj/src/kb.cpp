#include "semidial/kb.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "semidial/error.hpp"

namespace semidial {

std::size_t match_bin(std::size_t count) { return std::min<std::size_t>(count, kQueryBins - 1); }

DBQueryVector query_vector(std::size_t count) {
  DBQueryVector q{};
  q[match_bin(count)] = 1.0;
  return q;
}

void EntityDB::add(Entity entity) {
  auto& bucket = records_[entity.domain];
  for (const auto& e : bucket) {
    if (e.id == entity.id) {
      throw LoadError("database: duplicate record id '" + entity.id + "' in domain " +
                      entity.domain);
    }
  }
  bucket.push_back(std::move(entity));
}

EntityDB EntityDB::from_json(const Json& j, const Ontology& ontology) {
  if (!j.is_object()) {
    throw LoadError("database: expected an object keyed by domain");
  }
  EntityDB db;
  for (const auto& [domain, recs] : j.items()) {
    if (!ontology.domain_index(domain)) {
      throw LoadError("database: unknown domain '" + domain + "'");
    }
    db.records_[domain];
    if (!recs.is_array()) {
      throw LoadError("database: domain '" + domain + "' is not an array");
    }
    for (const auto& r : recs) {
      Entity e;
      e.domain = domain;
      if (!r.is_object() || !r.contains("id") || !r.at("id").is_string()) {
        throw LoadError("database: record in '" + domain + "' without a string id");
      }
      for (const auto& [key, value] : r.items()) {
        if (key == "id") {
          e.id = value.get<std::string>();
          continue;
        }
        if (!value.is_string()) {
          throw LoadError("database: field '" + key + "' of record in '" + domain +
                          "' is not a string");
        }
        e.fields[key] = value.get<std::string>();
      }
      for (const auto& [key, value] : e.fields) {
        if (auto slot = ontology.informable_index(domain, key)) {
          if (!ontology.value_index(*slot, value)) {
            throw LoadError("database: record '" + e.id + "' has value '" + value +
                            "' outside the ontology for " + domain + "-" + key);
          }
        }
      }
      db.add(std::move(e));
    }
  }
  return db;
}

EntityDB EntityDB::load(const std::filesystem::path& path, const Ontology& ontology) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open " + path.string());
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(path.string() + ": malformed JSON: " + e.what());
  }
  return from_json(j, ontology);
}

Json EntityDB::to_json() const {
  Json out = Json::object();
  for (const auto& [domain, recs] : records_) {
    Json arr = Json::array();
    for (const auto& e : recs) {
      Json r = {{"id", e.id}};
      for (const auto& [k, v] : e.fields) {
        r[k] = v;
      }
      arr.push_back(std::move(r));
    }
    out[domain] = std::move(arr);
  }
  return out;
}

void EntityDB::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << to_json().dump(1) << '\n';
}

bool EntityDB::has_domain(std::string_view domain) const {
  return records_.count(std::string(domain)) > 0;
}

const std::vector<Entity>& EntityDB::records(std::string_view domain) const {
  auto it = records_.find(std::string(domain));
  if (it == records_.end()) {
    throw QueryError("unknown domain '" + std::string(domain) + "'");
  }
  return it->second;
}

std::vector<std::string> EntityDB::domains() const {
  std::vector<std::string> out;
  for (const auto& [d, _] : records_) {
    out.push_back(d);
  }
  return out;
}

const Entity* EntityDB::find(std::string_view domain, std::string_view id) const {
  auto it = records_.find(std::string(domain));
  if (it == records_.end()) {
    return nullptr;
  }
  for (const auto& e : it->second) {
    if (e.id == id) {
      return &e;
    }
  }
  return nullptr;
}

std::vector<const Entity*> EntityDB::match(
    std::string_view domain, const std::map<std::string, std::string>& constraints) const {
  std::vector<const Entity*> out;
  for (const auto& e : records(domain)) {
    bool ok = true;
    for (const auto& [slot, value] : constraints) {
      const std::string* v = e.field(slot);
      if (v == nullptr || *v != value) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.push_back(&e);
    }
  }
  return out;
}

std::map<std::string, std::string> belief_constraints(const BeliefState& belief,
                                                      const Ontology& ontology,
                                                      std::string_view domain) {
  std::map<std::string, std::string> constraints;
  for (std::size_t s : ontology.informable_of(domain)) {
    const int top = belief.argmax(s);
    if (top != kNotMentioned && top != kDontCare) {
      constraints[ontology.informable()[s].slot] = ontology.value(s, top);
    }
  }
  return constraints;
}

QueryResult query(const EntityDB& db, const BeliefState& belief, const Ontology& ontology,
                  std::string_view domain) {
  QueryResult r;
  r.matches = db.match(domain, belief_constraints(belief, ontology, domain));
  r.q = query_vector(r.matches.size());
  return r;
}

const Entity* select_entity(std::span<const Entity* const> matching) {
  const Entity* best = nullptr;
  for (const Entity* e : matching) {
    if (best == nullptr || e->id < best->id) {
      best = e;
    }
  }
  return best;
}

}  // namespace semidial
