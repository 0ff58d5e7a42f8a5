#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "semidial/corpus.hpp"

namespace semidial {

// Which predicted values leave the stored distribution untouched.
enum class KeepRule {
  literal,             // not-mentioned or dont-care
  not_mentioned_only,  // not-mentioned only; dont-care can enter the state
};

std::string_view to_string(KeepRule rule);
KeepRule keep_rule_from_string(std::string_view s);

// Value-level output of the tracker for one user turn.
struct TurnPrediction {
  std::vector<std::vector<double>> informable;  // p^inf per informable slot
  std::vector<double> requestable;              // p^req per requestable slot
  std::vector<std::vector<double>> scores;      // raw similarities per informable slot
  // Attention weights over the utterance, one row per value (K x L), per slot.
  std::vector<std::vector<std::vector<double>>> attention;
};

struct BeliefState {
  std::vector<std::vector<double>> slots;  // aligned with Ontology::informable()

  int argmax(std::size_t slot) const;
  std::vector<int> argmaxes() const;
  std::vector<double> flatten() const;
  bool operator==(const BeliefState&) const = default;
};

int argmax(std::span<const double> values);

BeliefState initial_belief(const Ontology& ontology);

bool keeps_previous(std::span<const double> prediction, KeepRule rule = KeepRule::literal);

// Per slot: keep prev when the prediction's argmax is special, otherwise take
// the predicted distribution.
BeliefState update_belief(const BeliefState& prev, const TurnPrediction& pred,
                          KeepRule rule = KeepRule::literal);

// {"domain-slot": {value: probability}}
Json belief_to_json(const BeliefState& belief, const Ontology& ontology);

}  // namespace semidial
