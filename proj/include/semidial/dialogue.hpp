#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidial/dst.hpp"
#include "semidial/kb.hpp"
#include "semidial/model.hpp"
#include "semidial/policy.hpp"

namespace semidial {

// Domain the system talks about this turn: the domain of the most confident
// informable slot the tracker updated, else the previous focus, else the
// first ontology domain.
std::size_t focus_domain(const TurnPrediction& pred, const Ontology& ontology, KeepRule rule,
                         std::optional<std::size_t> previous);

// State carried between turns of one dialogue on a graph.
struct DialogueCursor {
  dst::BeliefVars belief;
  std::optional<std::size_t> focus;
};

DialogueCursor start_dialogue(nn::Graph& g, const Network& net);

struct TrackedTurn {
  nn::EncodedSequence utterance;
  dst::TurnPredictionVars prediction;
  TurnPrediction prediction_values;
  BeliefState belief;  // after the update
  std::size_t focus = 0;
  QueryResult query;
  nn::Var z;
  nn::Var gate0;
};

// encode -> predict -> update belief -> query -> policy, advancing cursor.
TrackedTurn track_turn(nn::Graph& g, Network& net, nn::Var sv, const EntityDB& db,
                       std::span<const int> user_ids, DialogueCursor& cursor);

struct TurnOutput {
  TurnPrediction prediction;
  BeliefState belief;
  std::string focus_domain;
  std::size_t match_count = 0;
  GenerationResult response;
  bool lexicalization_failed = false;
};

// Inference over a live dialogue; owns belief and focus between turns.
class DialogueSession {
 public:
  DialogueSession(Network& net, const EntityDB& db);

  TurnOutput step(std::span<const int> user_ids);
  void reset();
  const BeliefState& belief() const { return belief_; }
  std::size_t turns() const { return turns_; }

 private:
  Network& net_;
  const EntityDB& db_;
  std::vector<double> sv_;  // slot-value encodings, fixed for fixed parameters
  std::size_t sv_rows_ = 0;
  std::size_t sv_cols_ = 0;
  BeliefState belief_;
  std::optional<std::size_t> focus_;
  std::size_t turns_ = 0;
};

// Runs the system over the dialogue's user turns.
std::vector<TurnOutput> run_dialogue(Network& net, const EntityDB& db, const Dialogue& dialogue);

}  // namespace semidial
