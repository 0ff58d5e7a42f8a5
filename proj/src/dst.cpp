#include "semidial/dst.hpp"

#include <algorithm>
#include <cmath>

#include "semidial/error.hpp"

namespace semidial::dst {

Attention attend(std::span<const double> hidden, std::size_t length, std::span<const double> sv,
                 AttentionNorm norm) {
  if (length == 0) {
    throw ContractError("attend: empty utterance");
  }
  const std::size_t dim = sv.size();
  if (hidden.size() != length * dim) {
    throw ContractError("attend: hidden states are not L x d_h");
  }
  Attention out;
  out.weights.resize(length);
  for (std::size_t l = 0; l < length; ++l) {
    double e = 0.0;
    for (std::size_t k = 0; k < dim; ++k) e += hidden[l * dim + k] * sv[k];
    out.weights[l] = e;
  }
  if (norm == AttentionNorm::softmax) {
    const double mx = *std::max_element(out.weights.begin(), out.weights.end());
    double total = 0.0;
    for (double& w : out.weights) {
      w = std::exp(w - mx);
      total += w;
    }
    for (double& w : out.weights) w /= total;
  }
  out.context.assign(dim, 0.0);
  for (std::size_t l = 0; l < length; ++l) {
    for (std::size_t k = 0; k < dim; ++k) out.context[k] += out.weights[l] * hidden[l * dim + k];
  }
  return out;
}

nn::Var encode_slot_values(nn::Graph& g, Network& net) {
  auto& params = net.params();
  nn::Var domains = g.param(params, "dst.domain");
  nn::Var slots = g.param(params, "dst.slot");
  nn::Var values = g.param(params, "dst.value");
  nn::Var w = g.param(params, "dst.sv.W");
  nn::Var b = g.param(params, "dst.sv.b");
  std::vector<nn::Var> rows;
  rows.reserve(net.slot_value_rows().size());
  for (const auto& r : net.slot_value_rows()) {
    const nn::Var parts[] = {g.row(domains, r.domain), g.row(slots, r.slot_name),
                             g.row(values, r.value_name)};
    rows.push_back(g.affine(w, g.concat(parts), b));
  }
  return g.stack_rows(rows);
}

ScoredSlotValues score_slot_values(nn::Graph& g, nn::Var sv, nn::Var hidden, AttentionNorm norm) {
  if (g.cols(sv) != g.cols(hidden)) {
    throw ContractError("score_slot_values: encoding size differs from hidden size");
  }
  nn::Var sim = g.matmul_nt(sv, hidden);  // M x L
  nn::Var weights = norm == AttentionNorm::softmax ? g.softmax_rows(sim) : sim;
  nn::Var context = g.matmul(weights, hidden);  // M x d_h
  return {g.rowdot(context, sv), weights};
}

TurnPredictionVars predictions_from_scores(nn::Graph& g, const Network& net,
                                           const ScoredSlotValues& scored) {
  TurnPredictionVars out;
  const auto& inf = net.ontology().informable();
  for (std::size_t s = 0; s < inf.size(); ++s) {
    out.informable.push_back(
        g.softmax(g.slice(scored.scores, net.informable_offsets()[s], inf[s].values.size())));
  }
  const std::size_t R = net.ontology().requestable().size();
  if (R > 0) {
    out.requestable = g.sigmoid(g.slice(scored.scores, net.requestable_offset(), R));
  }
  out.scores = scored.scores;
  out.attention = scored.attention;
  return out;
}

TurnPredictionVars predict_turn(nn::Graph& g, Network& net, nn::Var sv,
                                const nn::EncodedSequence& utterance) {
  return predictions_from_scores(
      g, net, score_slot_values(g, sv, utterance.hidden, net.config().attention));
}

TurnPrediction to_values(const nn::Graph& g, const Network& net, const TurnPredictionVars& p) {
  TurnPrediction out;
  const auto& inf = net.ontology().informable();
  auto scores = g.value(p.scores);
  auto attention = g.value(p.attention);
  const std::size_t L = g.cols(p.attention);
  for (std::size_t s = 0; s < inf.size(); ++s) {
    out.informable.push_back(g.values(p.informable[s]));
    const std::size_t off = net.informable_offsets()[s];
    const std::size_t K = inf[s].values.size();
    out.scores.emplace_back(scores.begin() + static_cast<std::ptrdiff_t>(off),
                            scores.begin() + static_cast<std::ptrdiff_t>(off + K));
    std::vector<std::vector<double>> att;
    for (std::size_t k = 0; k < K; ++k) {
      auto row = attention.subspan((off + k) * L, L);
      att.emplace_back(row.begin(), row.end());
    }
    out.attention.push_back(std::move(att));
  }
  if (p.requestable.valid()) {
    out.requestable = g.values(p.requestable);
  }
  return out;
}

TurnPrediction predict_turn(Network& net, const nn::EncoderOutput& encoded) {
  nn::Graph g(false);
  nn::Var hidden = g.constant(encoded.length, encoded.dim, encoded.hidden);
  nn::EncodedSequence seq{hidden, g.constant(encoded.final_state), encoded.length};
  nn::Var sv = encode_slot_values(g, net);
  return to_values(g, net, predict_turn(g, net, sv, seq));
}

BeliefVars initial_belief(nn::Graph& g, const Ontology& ontology) {
  BeliefVars out;
  for (const auto& dist : semidial::initial_belief(ontology).slots) {
    out.push_back(g.constant(dist));
  }
  return out;
}

BeliefVars update_belief(nn::Graph& g, const BeliefVars& prev, const TurnPredictionVars& pred,
                         KeepRule rule) {
  if (prev.size() != pred.informable.size()) {
    throw ContractError("belief update: previous state and prediction cover different slots");
  }
  BeliefVars next;
  next.reserve(prev.size());
  for (std::size_t s = 0; s < prev.size(); ++s) {
    next.push_back(keeps_previous(g.value(pred.informable[s]), rule) ? prev[s]
                                                                     : pred.informable[s]);
  }
  return next;
}

BeliefState belief_values(const nn::Graph& g, const BeliefVars& belief) {
  BeliefState out;
  for (nn::Var v : belief) {
    out.slots.push_back(g.values(v));
  }
  return out;
}

}  // namespace semidial::dst
