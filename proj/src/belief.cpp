#include "semidial/belief.hpp"

#include <algorithm>

#include "semidial/error.hpp"

namespace semidial {

std::string_view to_string(KeepRule rule) {
  return rule == KeepRule::literal ? "literal" : "not_mentioned_only";
}

KeepRule keep_rule_from_string(std::string_view s) {
  if (s == "literal") return KeepRule::literal;
  if (s == "not_mentioned_only") return KeepRule::not_mentioned_only;
  throw ConfigError("unknown keep rule '" + std::string(s) + "'");
}

int argmax(std::span<const double> values) {
  if (values.empty()) {
    throw ContractError("argmax of an empty distribution");
  }
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int BeliefState::argmax(std::size_t slot) const { return semidial::argmax(slots.at(slot)); }

std::vector<int> BeliefState::argmaxes() const {
  std::vector<int> out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    out.push_back(semidial::argmax(s));
  }
  return out;
}

std::vector<double> BeliefState::flatten() const {
  std::vector<double> out;
  for (const auto& s : slots) {
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

BeliefState initial_belief(const Ontology& ontology) {
  BeliefState b;
  for (const auto& slot : ontology.informable()) {
    std::vector<double> d(slot.values.size(), 0.0);
    d[kNotMentioned] = 1.0;
    b.slots.push_back(std::move(d));
  }
  return b;
}

bool keeps_previous(std::span<const double> prediction, KeepRule rule) {
  const int top = argmax(prediction);
  if (top == kNotMentioned) {
    return true;
  }
  return rule == KeepRule::literal && top == kDontCare;
}

BeliefState update_belief(const BeliefState& prev, const TurnPrediction& pred, KeepRule rule) {
  if (prev.slots.size() != pred.informable.size()) {
    throw ContractError("belief update: previous state and prediction cover different slots");
  }
  BeliefState next;
  next.slots.reserve(prev.slots.size());
  for (std::size_t s = 0; s < prev.slots.size(); ++s) {
    if (prev.slots[s].size() != pred.informable[s].size()) {
      throw ContractError("belief update: value count mismatch on slot " + std::to_string(s));
    }
    next.slots.push_back(keeps_previous(pred.informable[s], rule) ? prev.slots[s]
                                                                   : pred.informable[s]);
  }
  return next;
}

Json belief_to_json(const BeliefState& belief, const Ontology& ontology) {
  Json out = Json::object();
  for (std::size_t s = 0; s < belief.slots.size(); ++s) {
    const auto& slot = ontology.informable().at(s);
    Json dist = Json::object();
    for (std::size_t k = 0; k < slot.values.size(); ++k) {
      dist[slot.values[k]] = belief.slots[s][k];
    }
    out[slot.key()] = std::move(dist);
  }
  return out;
}

}  // namespace semidial
