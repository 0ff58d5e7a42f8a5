#include "semidial/policy.hpp"

#include <algorithm>

#include "semidial/error.hpp"
#include "semidial/nn/layers.hpp"

namespace semidial {

bool lexicalize_response(GenerationResult& result, const Entity* entity) {
  result.lexicalized.reset();
  result.offered_entity_id.reset();
  result.offered_domain.clear();
  std::vector<std::string> body = result.delex_tokens;
  if (!body.empty() && body.back() == Vocab::kEosToken) {
    body.pop_back();
  }
  const bool has_placeholder =
      std::any_of(body.begin(), body.end(), [](const std::string& t) { return placeholder_slot(t).has_value(); });
  if (!has_placeholder) {
    result.lexicalized = std::move(body);
    return true;
  }
  if (entity == nullptr) {
    return false;
  }
  try {
    result.lexicalized = lexicalize(body, *entity);
  } catch (const GenerationError&) {
    return false;
  }
  if (std::find(body.begin(), body.end(), placeholder("name")) != body.end()) {
    result.offered_entity_id = entity->id;
    result.offered_domain = entity->domain;
  }
  return true;
}

namespace policy {

nn::Var policy(nn::Graph& g, Network& net, const dst::BeliefVars& belief, nn::Var final_state,
               const DBQueryVector& q) {
  std::vector<nn::Var> parts(belief.begin(), belief.end());
  parts.push_back(final_state);
  parts.push_back(g.constant(std::vector<double>(q.begin(), q.end())));
  nn::Var input = g.concat(parts);
  if (g.size(input) != net.policy_input_dim()) {
    throw ContractError("policy: input of size " + std::to_string(g.size(input)) +
                        ", expected " + std::to_string(net.policy_input_dim()));
  }
  return g.tanh(g.affine(g.param(net.params(), "policy.W"), input,
                         g.param(net.params(), "policy.b")));
}

std::vector<double> policy(Network& net, const BeliefState& belief,
                           std::span<const double> final_state, const DBQueryVector& q) {
  nn::Graph g(false);
  dst::BeliefVars vars;
  for (const auto& s : belief.slots) {
    vars.push_back(g.constant(s));
  }
  return g.values(policy(g, net, vars, g.constant({final_state.begin(), final_state.end()}), q));
}

std::vector<double> init_gate_memory(const TurnPrediction& pred, const Ontology& ontology) {
  if (pred.requestable.size() != ontology.requestable().size()) {
    throw ContractError("init_gate_memory: prediction does not cover every requestable slot");
  }
  if (ontology.requestable().empty()) {
    return {0.0};
  }
  return pred.requestable;
}

nn::Var init_gate_memory(nn::Graph& g, const Network& net, const dst::TurnPredictionVars& pred) {
  if (!pred.requestable.valid()) {
    (void)net;
    return g.zeros(1);
  }
  return pred.requestable;
}

nn::DecoderState decoder_start(nn::Graph& g, Network& net, nn::Var z) {
  nn::Var h = g.affine(g.param(net.params(), "decoder.init.W"), z,
                       g.param(net.params(), "decoder.init.b"));
  return {h, g.zeros(net.config().decoder_hidden_dim)};
}

std::vector<nn::Var> teacher_forced_logits(nn::Graph& g, Network& net, nn::Var z, nn::Var gate0,
                                           std::span<const int> targets) {
  const bool every_step = net.config().policy_injection == PolicyInjection::every_step;
  nn::DecoderState state = decoder_start(g, net, z);
  nn::Var gate = gate0;
  std::vector<nn::Var> logits;
  logits.reserve(targets.size());
  int input = Vocab::kBos;
  for (int target : targets) {
    auto step = nn::sclstm_step(g, net.params(), state, input, gate, net.gate_resets(input),
                                every_step ? z : nn::Var{});
    logits.push_back(step.logits);
    state = step.state;
    gate = step.gate_memory;
    input = target;
  }
  return logits;
}

GenerationResult generate(nn::Graph& g, Network& net, nn::Var z, nn::Var gate0,
                          std::size_t max_len) {
  if (max_len == 0) {
    throw ContractError("generate: max_len must be at least 1");
  }
  const bool every_step = net.config().policy_injection == PolicyInjection::every_step;
  GenerationResult out;
  nn::DecoderState state = decoder_start(g, net, z);
  nn::Var gate = gate0;
  out.gate_trace.push_back(g.values(gate));
  int input = Vocab::kBos;
  out.truncated = true;
  for (std::size_t step = 0; step < max_len; ++step) {
    auto s = nn::sclstm_step(g, net.params(), state, input, gate, net.gate_resets(input),
                             every_step ? z : nn::Var{});
    const int token = argmax(g.value(s.logits));
    out.delex_ids.push_back(token);
    out.delex_tokens.push_back(net.vocab().token(token));
    out.gate_trace.push_back(g.values(s.gate_memory));
    state = s.state;
    gate = s.gate_memory;
    input = token;
    if (token == Vocab::kEos) {
      out.truncated = false;
      break;
    }
  }
  return out;
}

GenerationResult generate(Network& net, std::span<const double> z, std::span<const double> gate0,
                          std::size_t max_len) {
  nn::Graph g(false);
  return generate(g, net, g.constant({z.begin(), z.end()}), g.constant({gate0.begin(), gate0.end()}),
                  max_len);
}

}  // namespace policy
}  // namespace semidial
