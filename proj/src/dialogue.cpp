#include "semidial/dialogue.hpp"

#include <algorithm>

#include "semidial/error.hpp"
#include "semidial/nn/layers.hpp"

namespace semidial {

std::size_t focus_domain(const TurnPrediction& pred, const Ontology& ontology, KeepRule rule,
                         std::optional<std::size_t> previous) {
  std::optional<std::size_t> best_domain;
  double best = -1.0;
  for (std::size_t s = 0; s < pred.informable.size(); ++s) {
    const auto& p = pred.informable[s];
    if (keeps_previous(p, rule)) {
      continue;
    }
    const double conf = *std::max_element(p.begin(), p.end());
    if (conf > best) {
      best = conf;
      best_domain = ontology.domain_index(ontology.informable()[s].domain);
    }
  }
  if (best_domain) return *best_domain;
  if (previous) return *previous;
  return 0;
}

DialogueCursor start_dialogue(nn::Graph& g, const Network& net) {
  return {dst::initial_belief(g, net.ontology()), std::nullopt};
}

TrackedTurn track_turn(nn::Graph& g, Network& net, nn::Var sv, const EntityDB& db,
                       std::span<const int> user_ids, DialogueCursor& cursor) {
  const Ontology& ontology = net.ontology();
  TrackedTurn t;
  t.utterance = nn::encode_sequence(g, net.params(), user_ids);
  t.prediction = dst::predict_turn(g, net, sv, t.utterance);
  t.prediction_values = dst::to_values(g, net, t.prediction);
  cursor.belief = dst::update_belief(g, cursor.belief, t.prediction, net.config().keep_rule);
  t.belief = dst::belief_values(g, cursor.belief);
  t.focus = focus_domain(t.prediction_values, ontology, net.config().keep_rule, cursor.focus);
  cursor.focus = t.focus;
  t.query = query(db, t.belief, ontology, ontology.domains().at(t.focus));
  t.z = policy::policy(g, net, cursor.belief, t.utterance.final_state, t.query.q);
  t.gate0 = policy::init_gate_memory(g, net, t.prediction);
  return t;
}

DialogueSession::DialogueSession(Network& net, const EntityDB& db) : net_(net), db_(db) {
  nn::Graph g(false);
  nn::Var sv = dst::encode_slot_values(g, net_);
  sv_ = g.values(sv);
  sv_rows_ = g.rows(sv);
  sv_cols_ = g.cols(sv);
  reset();
}

void DialogueSession::reset() {
  belief_ = initial_belief(net_.ontology());
  focus_.reset();
  turns_ = 0;
}

TurnOutput DialogueSession::step(std::span<const int> user_ids) {
  nn::Graph g(false);
  DialogueCursor cursor;
  for (const auto& dist : belief_.slots) {
    cursor.belief.push_back(g.constant(dist));
  }
  cursor.focus = focus_;
  nn::Var sv = g.constant(sv_rows_, sv_cols_, sv_);
  TrackedTurn t = track_turn(g, net_, sv, db_, user_ids, cursor);

  TurnOutput out;
  out.prediction = std::move(t.prediction_values);
  out.belief = t.belief;
  out.focus_domain = net_.ontology().domains().at(t.focus);
  out.match_count = t.query.matches.size();
  out.response = policy::generate(g, net_, t.z, t.gate0, net_.config().max_decode_len);
  out.lexicalization_failed = !lexicalize_response(out.response, select_entity(t.query.matches));

  belief_ = std::move(t.belief);
  focus_ = cursor.focus;
  ++turns_;
  return out;
}

std::vector<TurnOutput> run_dialogue(Network& net, const EntityDB& db, const Dialogue& dialogue) {
  DialogueSession session(net, db);
  std::vector<TurnOutput> out;
  out.reserve(dialogue.turns.size());
  for (const auto& turn : dialogue.turns) {
    out.push_back(session.step(turn.user_ids));
  }
  return out;
}

}  // namespace semidial
