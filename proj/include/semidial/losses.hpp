#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "semidial/belief.hpp"
#include "semidial/corpus.hpp"
#include "semidial/dst.hpp"
#include "semidial/nn/graph.hpp"

namespace semidial {

// Tracker targets of one turn. Absent entries contribute no loss.
struct DstTargets {
  std::vector<std::optional<int>> informable;   // value index per informable slot
  std::vector<std::optional<int>> requestable;  // 0 or 1 per requestable slot

  std::size_t count() const;
};

DstTargets gold_targets(const TurnLabels& labels);

// Per-slot pseudo-labels: an informable slot gets its argmax when the top
// probability is strictly above nu; a requestable slot gets 1 above nu and 0
// below 1 - nu.
DstTargets pseudo_label(const TurnPrediction& pred, double nu);

// Cross-entropy over informable slots plus binary cross-entropy over
// requestable slots, probabilities floored at kProbFloor.
double dst_loss(const TurnPrediction& pred, const DstTargets& targets);
nn::Var dst_loss(nn::Graph& g, const dst::TurnPredictionVars& pred, const DstTargets& targets);

// Summed token cross-entropy. The value form takes per-step probabilities,
// the graph form per-step logits.
double gen_loss(std::span<const std::vector<double>> step_probs, std::span<const int> targets);
nn::Var gen_loss(nn::Graph& g, std::span<const nn::Var> step_logits, std::span<const int> targets);

// alpha / N * sum over turns and informable entries of (target - noisy)^2.
// The graph form stops gradients through target.
double pi_loss(std::span<const TurnPrediction> target, std::span<const TurnPrediction> noisy,
               double alpha, std::size_t batch_size);
nn::Var pi_loss(nn::Graph& g, std::span<const nn::Var> target, std::span<const nn::Var> noisy,
                double alpha, std::size_t batch_size);

// Distributions used as Pi-model targets when reading the target as gold.
std::vector<std::vector<double>> one_hot_targets(const TurnLabels& labels, const Ontology& ontology);

}  // namespace semidial
