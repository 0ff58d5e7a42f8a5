#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semidial/dst.hpp"
#include "semidial/kb.hpp"
#include "semidial/model.hpp"
#include "semidial/nn/graph.hpp"

namespace semidial {

struct GenerationResult {
  std::vector<int> delex_ids;               // ends with <eos> unless truncated
  std::vector<std::string> delex_tokens;
  std::optional<std::vector<std::string>> lexicalized;
  std::vector<std::vector<double>> gate_trace;  // gate memory before the first step, then after each
  bool truncated = false;
  // Set when the response names an entity and was lexicalized from it.
  std::optional<std::string> offered_entity_id;
  std::string offered_domain;
};

// Fills `lexicalized` (and the offered entity) from entity. Returns false and
// leaves them empty when a placeholder cannot be filled.
bool lexicalize_response(GenerationResult& result, const Entity* entity);

namespace policy {

// z = tanh(W [belief ; final_state ; q] + b)
nn::Var policy(nn::Graph& g, Network& net, const dst::BeliefVars& belief, nn::Var final_state,
               const DBQueryVector& q);
std::vector<double> policy(Network& net, const BeliefState& belief,
                           std::span<const double> final_state, const DBQueryVector& q);

// Gate memory = requestable probabilities in ontology order.
std::vector<double> init_gate_memory(const TurnPrediction& pred, const Ontology& ontology);
nn::Var init_gate_memory(nn::Graph& g, const Network& net, const dst::TurnPredictionVars& pred);

// Initial decoder state from the policy vector.
nn::DecoderState decoder_start(nn::Graph& g, Network& net, nn::Var z);

// Teacher-forced decoder logits for targets (which end with <eos>); step l
// consumes <bos> or targets[l - 1].
std::vector<nn::Var> teacher_forced_logits(nn::Graph& g, Network& net, nn::Var z, nn::Var gate0,
                                           std::span<const int> targets);

// Greedy decoding until <eos> or max_len tokens.
GenerationResult generate(nn::Graph& g, Network& net, nn::Var z, nn::Var gate0,
                          std::size_t max_len);
GenerationResult generate(Network& net, std::span<const double> z, std::span<const double> gate0,
                          std::size_t max_len);

}  // namespace policy
}  // namespace semidial
