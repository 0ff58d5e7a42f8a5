#include "semidial/metrics.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "semidial/error.hpp"

namespace semidial {

StateTrajectory gold_trajectory(const Dialogue& dialogue, KeepRule rule) {
  StateTrajectory out;
  std::vector<int> state;
  for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
    const auto& labels = dialogue.turns[t].labels;
    if (!labels) {
      throw ContractError("gold_trajectory: dialogue " + dialogue.id + " turn " +
                          std::to_string(t) + " has no labels");
    }
    if (state.empty()) {
      state.assign(labels->informable.size(), kNotMentioned);
    }
    for (std::size_t s = 0; s < state.size(); ++s) {
      const int v = labels->informable.at(s);
      const bool keep = v == kNotMentioned || (rule == KeepRule::literal && v == kDontCare);
      if (!keep) state[s] = v;
    }
    out.push_back(state);
  }
  return out;
}

double joint_goal_accuracy(std::span<const StateTrajectory> predicted,
                           std::span<const StateTrajectory> gold) {
  if (predicted.size() != gold.size()) {
    throw ContractError("joint_goal_accuracy: dialogue counts differ");
  }
  std::size_t turns = 0;
  std::size_t correct = 0;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (predicted[d].size() != gold[d].size()) {
      throw ContractError("joint_goal_accuracy: dialogue " + std::to_string(d) +
                          " has misaligned turns");
    }
    for (std::size_t t = 0; t < gold[d].size(); ++t) {
      if (predicted[d][t].size() != gold[d][t].size()) {
        throw ContractError("joint_goal_accuracy: slot counts differ");
      }
      ++turns;
      if (predicted[d][t] == gold[d][t]) ++correct;
    }
  }
  return turns ? static_cast<double>(correct) / static_cast<double>(turns) : 0.0;
}

std::vector<std::string> goal_domains(const Dialogue& dialogue) {
  std::vector<std::string> out = dialogue.domains;
  for (const auto& c : dialogue.goal.constraints) {
    if (std::find(out.begin(), out.end(), c.domain) == out.end()) out.push_back(c.domain);
  }
  return out;
}

bool success(const Dialogue& dialogue, std::span<const GenerationResult> outputs,
             const EntityDB& db) {
  for (const auto& domain : goal_domains(dialogue)) {
    bool offered = false;
    for (const auto& out : outputs) {
      if (!out.offered_entity_id || out.offered_domain != domain) continue;
      const Entity* e = db.find(domain, *out.offered_entity_id);
      if (e == nullptr) continue;
      bool satisfies = true;
      for (const auto& c : dialogue.goal.constraints) {
        if (c.domain != domain) continue;
        const std::string* v = e->field(c.slot);
        if (v == nullptr || *v != c.value) {
          satisfies = false;
          break;
        }
      }
      if (satisfies) {
        offered = true;
        break;
      }
    }
    if (!offered) return false;
  }
  for (const auto& r : dialogue.goal.requests) {
    const std::string token = placeholder(r.slot);
    const bool mentioned = std::any_of(outputs.begin(), outputs.end(), [&](const GenerationResult& o) {
      return std::find(o.delex_tokens.begin(), o.delex_tokens.end(), token) != o.delex_tokens.end();
    });
    if (!mentioned) return false;
  }
  return true;
}

FrequencyBuckets FrequencyBuckets::from_corpus(const Corpus& corpus) {
  FrequencyBuckets b;
  for (std::size_t i : corpus.indices(Split::train)) {
    for (const auto& turn : corpus.dialogues()[i].turns) {
      if (!turn.labels) continue;
      for (std::size_t s = 0; s < turn.labels->informable.size(); ++s) {
        const int v = turn.labels->informable[s];
        if (v != kNotMentioned) ++b.counts_[{s, v}];
      }
    }
  }
  return b;
}

std::string_view FrequencyBuckets::bucket_of(std::size_t count) {
  if (count == 0) return kLabels[0];
  if (count <= 5) return kLabels[1];
  if (count <= 10) return kLabels[2];
  if (count <= 15) return kLabels[3];
  if (count <= 20) return kLabels[4];
  return kLabels[5];
}

std::size_t FrequencyBuckets::count(std::size_t slot, int value) const {
  auto it = counts_.find({slot, value});
  return it == counts_.end() ? 0 : it->second;
}

void BucketAccumulator::add(const TurnLabels& gold, const TurnPrediction& pred) {
  if (gold.informable.size() != pred.informable.size()) {
    throw ContractError("bucket_accuracy: labels and prediction cover different slots");
  }
  for (std::size_t s = 0; s < gold.informable.size(); ++s) {
    const int v = gold.informable[s];
    if (v == kNotMentioned) continue;
    const bool hit = argmax(pred.informable[s]) == v;
    auto& stat = acc_.buckets[std::string(buckets_.bucket(s, v))];
    ++stat.total;
    ++acc_.overall.total;
    if (hit) {
      ++stat.correct;
      ++acc_.overall.correct;
    }
  }
}

std::map<std::string, double> per_domain_success(std::span<const Dialogue> dialogues,
                                                 const std::vector<bool>& successes) {
  if (dialogues.size() != successes.size()) {
    throw ContractError("per_domain_success: one success flag per dialogue expected");
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    std::set<std::string> tags(dialogues[i].domains.begin(), dialogues[i].domains.end());
    for (const auto& d : tags) {
      auto& [hits, n] = tally[d];
      ++n;
      if (successes[i]) ++hits;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [d, t] : tally) {
    out[d] = static_cast<double>(t.first) / static_cast<double>(t.second);
  }
  return out;
}

Json MetricsReport::to_json() const {
  Json buckets = Json::object();
  for (const auto& [label, _] : bucket_sizes) {
    buckets[label] = {{"accuracy", bucket_accuracy.at(label)}, {"instances", bucket_sizes.at(label)}};
  }
  return Json{{"joint_goal_accuracy", joint_goal_accuracy},
              {"success_rate", success_rate},
              {"slot_value_accuracy", slot_value_accuracy},
              {"bucket_accuracy", buckets},
              {"per_domain_success", per_domain_success},
              {"dialogues", dialogues},
              {"turns", turns},
              {"lexicalization_failures", lexicalization_failures}};
}

MetricsReport evaluate(Network& net, const Corpus& corpus, const EntityDB& db, Split split,
                       const FrequencyBuckets* buckets) {
  MetricsReport report;
  std::vector<StateTrajectory> predicted;
  std::vector<StateTrajectory> gold;
  std::vector<Dialogue> dialogues;
  std::vector<bool> flags;
  std::optional<BucketAccumulator> acc;
  if (buckets) acc.emplace(*buckets);

  for (std::size_t i : corpus.indices(split)) {
    const Dialogue& d = corpus.dialogues()[i];
    auto outputs = run_dialogue(net, db, d);
    StateTrajectory traj;
    std::vector<GenerationResult> responses;
    for (std::size_t t = 0; t < outputs.size(); ++t) {
      traj.push_back(outputs[t].belief.argmaxes());
      if (outputs[t].lexicalization_failed) ++report.lexicalization_failures;
      if (acc && d.turns[t].labels) acc->add(*d.turns[t].labels, outputs[t].prediction);
      responses.push_back(std::move(outputs[t].response));
    }
    predicted.push_back(std::move(traj));
    gold.push_back(gold_trajectory(d, net.config().keep_rule));
    flags.push_back(success(d, responses, db));
    dialogues.push_back(d);
    report.turns += d.turns.size();
  }
  report.dialogues = dialogues.size();
  report.joint_goal_accuracy = joint_goal_accuracy(predicted, gold);
  if (!flags.empty()) {
    report.success_rate = static_cast<double>(std::count(flags.begin(), flags.end(), true)) /
                          static_cast<double>(flags.size());
  }
  report.per_domain_success = per_domain_success(dialogues, flags);
  if (acc) {
    const BucketAccuracy b = acc->result();
    for (const auto& [label, stat] : b.buckets) {
      report.bucket_accuracy[label] = stat.accuracy();
      report.bucket_sizes[label] = stat.total;
    }
    report.slot_value_accuracy = b.overall.accuracy();
  }
  return report;
}

}  // namespace semidial
