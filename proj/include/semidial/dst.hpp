#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semidial/belief.hpp"
#include "semidial/model.hpp"
#include "semidial/nn/graph.hpp"
#include "semidial/nn/layers.hpp"

namespace semidial::dst {

struct Attention {
  std::vector<double> context;  // d_h
  std::vector<double> weights;  // L
};

// e_l = <h_l, sv>; weights = softmax(e) (or e itself when norm is none);
// context = sum_l weights_l h_l. hidden is L x d_h row-major.
Attention attend(std::span<const double> hidden, std::size_t length, std::span<const double> sv,
                 AttentionNorm norm = AttentionNorm::softmax);

// Encodings sv for every row of Network::slot_value_rows(), stacked M x d_h.
nn::Var encode_slot_values(nn::Graph& g, Network& net);

struct ScoredSlotValues {
  nn::Var scores;     // M x 1, s_k = <a_k, sv_k>
  nn::Var attention;  // M x L attention weights
};

// Attention of every slot-value encoding over the utterance states, then the
// similarity between each context vector and its encoding.
ScoredSlotValues score_slot_values(nn::Graph& g, nn::Var sv, nn::Var hidden, AttentionNorm norm);

struct TurnPredictionVars {
  std::vector<nn::Var> informable;  // K_j x 1 distribution per informable slot
  nn::Var requestable;              // R x 1 probabilities, invalid when R = 0
  nn::Var scores;
  nn::Var attention;
};

TurnPredictionVars predict_turn(nn::Graph& g, Network& net, nn::Var sv,
                                const nn::EncodedSequence& utterance);

// Splits raw scores into per-slot softmax distributions and requestable sigmoids.
TurnPredictionVars predictions_from_scores(nn::Graph& g, const Network& net,
                                           const ScoredSlotValues& scored);

TurnPrediction to_values(const nn::Graph& g, const Network& net, const TurnPredictionVars& p);

// Value-level wrapper: scores an already encoded utterance.
TurnPrediction predict_turn(Network& net, const nn::EncoderOutput& encoded);

// Graph-side belief: one distribution node per informable slot.
using BeliefVars = std::vector<nn::Var>;

BeliefVars initial_belief(nn::Graph& g, const Ontology& ontology);
BeliefVars update_belief(nn::Graph& g, const BeliefVars& prev, const TurnPredictionVars& pred,
                         KeepRule rule);
BeliefState belief_values(const nn::Graph& g, const BeliefVars& belief);

}  // namespace semidial::dst
