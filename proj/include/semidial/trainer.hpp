#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "semidial/corpus.hpp"
#include "semidial/kb.hpp"
#include "semidial/model.hpp"
#include "semidial/nn/graph.hpp"

namespace semidial {

enum class TrainingMode { baseline, pseudo, pi };
enum class PiTarget { clean_pred, gold };
enum class OptimizerKind { sgd, adam };

std::string_view to_string(TrainingMode m);
std::string_view to_string(PiTarget t);
std::string_view to_string(OptimizerKind o);
TrainingMode training_mode_from_string(std::string_view s);
PiTarget pi_target_from_string(std::string_view s);
OptimizerKind optimizer_from_string(std::string_view s);

struct TrainingConfig {
  TrainingMode mode = TrainingMode::baseline;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 0.01;
  double clip_norm = 5.0;
  std::size_t batch_size = 16;
  std::size_t epochs = 100;
  std::size_t patience = 10;
  double nu = 0.9;
  double sigma = 0.5;
  double alpha = 1.0;
  PiTarget pi_target = PiTarget::clean_pred;
  std::uint64_t seed = 1;
  double labelled_fraction = 1.0;
  ModelConfig model;

  void validate() const;
  Json to_json() const;
  // Missing keys keep their defaults; "model" holds a ModelConfig.
  static TrainingConfig from_json(const Json& j);
};

struct LossBreakdown {
  double l_dst = 0.0;
  double l_gen = 0.0;
  double l_pi = 0.0;
  double total = 0.0;
  std::size_t pseudo_labels_used = 0;

  LossBreakdown& operator+=(const LossBreakdown& other);
};

struct BatchLoss {
  nn::Var total;
  nn::Var l_dst;
  nn::Var l_gen;
  nn::Var l_pi;
  LossBreakdown breakdown;
  // Values of the Pi-model targets, one distribution per slot and turn.
  std::vector<std::vector<double>> pi_target_values;
};

// Joint loss of a batch of dialogues on one graph. Noise for the perturbed
// pass is drawn from rng in turn order. frozen_pi_targets, when non-empty,
// replaces the Pi-model targets with constants (as returned in
// pi_target_values), which makes the loss differentiable end to end the way
// the stop-gradient treats it.
BatchLoss batch_loss(nn::Graph& g, Network& net, const EntityDB& db,
                     std::span<const Dialogue* const> batch, const TrainingConfig& config,
                     std::mt19937_64& rng,
                     std::span<const std::vector<double>> frozen_pi_targets = {});

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;  // summed over the epoch's batches
  double valid_joint_acc = 0.0;
  double valid_success = 0.0;

  Json to_json() const;
};

struct TrainingResult {
  Network network;  // best-validation parameters
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_valid_joint_acc = 0.0;
};

// Called after every epoch, e.g. to stream the log.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Labels are first restricted to config.labelled_fraction of the training
// dialogues. Early stopping watches validation joint goal accuracy.
TrainingResult train(const TrainingConfig& config, const Corpus& corpus, const EntityDB& db,
                     const EpochCallback& on_epoch = {});

}  // namespace semidial
