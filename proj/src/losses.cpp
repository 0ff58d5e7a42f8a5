#include "semidial/losses.hpp"

#include <algorithm>
#include <cmath>

#include "semidial/error.hpp"

namespace semidial {

std::size_t DstTargets::count() const {
  auto present = [](const auto& v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](const std::optional<int>& t) { return t.has_value(); }));
  };
  return present(informable) + present(requestable);
}

DstTargets gold_targets(const TurnLabels& labels) {
  DstTargets t;
  t.informable.assign(labels.informable.begin(), labels.informable.end());
  t.requestable.assign(labels.requestable.begin(), labels.requestable.end());
  return t;
}

DstTargets pseudo_label(const TurnPrediction& pred, double nu) {
  DstTargets t;
  for (const auto& p : pred.informable) {
    const auto it = std::max_element(p.begin(), p.end());
    if (it != p.end() && *it > nu) {
      t.informable.emplace_back(static_cast<int>(it - p.begin()));
    } else {
      t.informable.emplace_back();
    }
  }
  for (double p : pred.requestable) {
    if (p > nu) {
      t.requestable.emplace_back(1);
    } else if (p < 1.0 - nu) {
      t.requestable.emplace_back(0);
    } else {
      t.requestable.emplace_back();
    }
  }
  return t;
}

namespace {

void check_cover(std::size_t inf, std::size_t req, const DstTargets& t) {
  if (t.informable.size() != inf || t.requestable.size() != req) {
    throw ContractError("dst_loss: targets do not match the prediction's slots");
  }
}

double floored_log(double p) { return std::log(std::max(p, nn::kProbFloor)); }

}  // namespace

double dst_loss(const TurnPrediction& pred, const DstTargets& targets) {
  check_cover(pred.informable.size(), pred.requestable.size(), targets);
  double loss = 0.0;
  for (std::size_t s = 0; s < targets.informable.size(); ++s) {
    if (targets.informable[s]) {
      loss -= floored_log(pred.informable[s].at(static_cast<std::size_t>(*targets.informable[s])));
    }
  }
  for (std::size_t r = 0; r < targets.requestable.size(); ++r) {
    if (targets.requestable[r]) {
      const double p = pred.requestable[r];
      loss -= *targets.requestable[r] == 1 ? floored_log(p) : floored_log(1.0 - p);
    }
  }
  return loss;
}

nn::Var dst_loss(nn::Graph& g, const dst::TurnPredictionVars& pred, const DstTargets& targets) {
  const std::size_t R = pred.requestable.valid() ? g.size(pred.requestable) : 0;
  check_cover(pred.informable.size(), R, targets);
  std::vector<nn::Var> terms;
  for (std::size_t s = 0; s < targets.informable.size(); ++s) {
    if (targets.informable[s]) {
      terms.push_back(g.neg_log(pred.informable[s], static_cast<std::size_t>(*targets.informable[s])));
    }
  }
  for (std::size_t r = 0; r < targets.requestable.size(); ++r) {
    if (targets.requestable[r]) {
      terms.push_back(g.binary_cross_entropy(pred.requestable, r, *targets.requestable[r]));
    }
  }
  return terms.empty() ? g.zeros(1) : g.add_n(terms);
}

double gen_loss(std::span<const std::vector<double>> step_probs, std::span<const int> targets) {
  if (step_probs.size() != targets.size()) {
    throw ContractError("gen_loss: step count differs from target length");
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    loss -= floored_log(step_probs[l].at(static_cast<std::size_t>(targets[l])));
  }
  return loss;
}

nn::Var gen_loss(nn::Graph& g, std::span<const nn::Var> step_logits, std::span<const int> targets) {
  if (step_logits.size() != targets.size()) {
    throw ContractError("gen_loss: step count differs from target length");
  }
  std::vector<nn::Var> terms;
  terms.reserve(targets.size());
  for (std::size_t l = 0; l < targets.size(); ++l) {
    terms.push_back(g.cross_entropy_logits(step_logits[l], static_cast<std::size_t>(targets[l])));
  }
  return terms.empty() ? g.zeros(1) : g.add_n(terms);
}

double pi_loss(std::span<const TurnPrediction> target, std::span<const TurnPrediction> noisy,
               double alpha, std::size_t batch_size) {
  if (target.size() != noisy.size()) {
    throw ContractError("pi_loss: clean and noisy passes cover different turns");
  }
  if (batch_size == 0) {
    throw ContractError("pi_loss: batch size must be positive");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (target[t].informable.size() != noisy[t].informable.size()) {
      throw ContractError("pi_loss: predictions cover different slots");
    }
    for (std::size_t s = 0; s < target[t].informable.size(); ++s) {
      const auto& a = target[t].informable[s];
      const auto& b = noisy[t].informable[s];
      if (a.size() != b.size()) {
        throw ContractError("pi_loss: slot distributions differ in size");
      }
      for (std::size_t k = 0; k < a.size(); ++k) total += (a[k] - b[k]) * (a[k] - b[k]);
    }
  }
  return alpha / static_cast<double>(batch_size) * total;
}

nn::Var pi_loss(nn::Graph& g, std::span<const nn::Var> target, std::span<const nn::Var> noisy,
                double alpha, std::size_t batch_size) {
  if (target.size() != noisy.size()) {
    throw ContractError("pi_loss: clean and noisy passes cover different slots");
  }
  if (batch_size == 0) {
    throw ContractError("pi_loss: batch size must be positive");
  }
  if (target.empty()) {
    return g.zeros(1);
  }
  std::vector<nn::Var> terms;
  terms.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    terms.push_back(g.squared_distance(g.stop_gradient(target[i]), noisy[i]));
  }
  return g.scale(g.add_n(terms), alpha / static_cast<double>(batch_size));
}

std::vector<std::vector<double>> one_hot_targets(const TurnLabels& labels, const Ontology& ontology) {
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < ontology.informable().size(); ++s) {
    std::vector<double> d(ontology.informable()[s].values.size(), 0.0);
    d.at(static_cast<std::size_t>(labels.informable.at(s))) = 1.0;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace semidial
