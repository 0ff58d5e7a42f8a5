#include "semidial/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "semidial/dialogue.hpp"
#include "semidial/error.hpp"
#include "semidial/losses.hpp"
#include "semidial/metrics.hpp"
#include "semidial/nn/layers.hpp"
#include "semidial/nn/optim.hpp"

namespace semidial {

std::string_view to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::baseline: return "baseline";
    case TrainingMode::pseudo: return "pseudo";
    case TrainingMode::pi: return "pi";
  }
  return "baseline";
}

std::string_view to_string(PiTarget t) { return t == PiTarget::gold ? "gold" : "clean_pred"; }

std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("optimizer must be sgd or adam, got '" + std::string(s) + "'");
}

TrainingMode training_mode_from_string(std::string_view s) {
  if (s == "baseline") return TrainingMode::baseline;
  if (s == "pseudo") return TrainingMode::pseudo;
  if (s == "pi") return TrainingMode::pi;
  throw ConfigError("mode must be baseline, pseudo or pi, got '" + std::string(s) + "'");
}

PiTarget pi_target_from_string(std::string_view s) {
  if (s == "clean_pred") return PiTarget::clean_pred;
  if (s == "gold") return PiTarget::gold;
  throw ConfigError("pi_target must be clean_pred or gold, got '" + std::string(s) + "'");
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in [0, 1]");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(labelled_fraction >= 0.0 && labelled_fraction <= 1.0)) {
    throw ConfigError("labelled_fraction must lie in [0, 1]");
  }
  model.validate();
}

Json TrainingConfig::to_json() const {
  return Json{{"mode", std::string(to_string(mode))},
              {"optimizer", std::string(to_string(optimizer))},
              {"learning_rate", learning_rate},
              {"clip_norm", clip_norm},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"patience", patience},
              {"nu", nu},
              {"sigma", sigma},
              {"alpha", alpha},
              {"pi_target", std::string(to_string(pi_target))},
              {"seed", seed},
              {"labelled_fraction", labelled_fraction},
              {"model", model.to_json()}};
}

TrainingConfig TrainingConfig::from_json(const Json& j) {
  TrainingConfig c;
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  try {
    if (j.contains("mode")) c.mode = training_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("optimizer")) {
      c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.nu = j.value("nu", c.nu);
    c.sigma = j.value("sigma", c.sigma);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("pi_target")) {
      c.pi_target = pi_target_from_string(j.at("pi_target").get<std::string>());
    }
    c.seed = j.value("seed", c.seed);
    c.labelled_fraction = j.value("labelled_fraction", c.labelled_fraction);
    if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  l_dst += o.l_dst;
  l_gen += o.l_gen;
  l_pi += o.l_pi;
  total += o.total;
  pseudo_labels_used += o.pseudo_labels_used;
  return *this;
}

namespace {

std::vector<double> embedding_noise(std::size_t length, std::size_t dim, double sigma,
                                    std::mt19937_64& rng) {
  std::vector<double> noise(length * dim, 0.0);
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    for (double& x : noise) x = normal(rng);
  }
  return noise;
}

}  // namespace

BatchLoss batch_loss(nn::Graph& g, Network& net, const EntityDB& db,
                     std::span<const Dialogue* const> batch, const TrainingConfig& config,
                     std::mt19937_64& rng,
                     std::span<const std::vector<double>> frozen_pi_targets) {
  if (batch.empty()) {
    throw ContractError("batch_loss: empty batch");
  }
  const Ontology& ontology = net.ontology();
  nn::Var sv = dst::encode_slot_values(g, net);
  std::vector<nn::Var> dst_terms;
  std::vector<nn::Var> gen_terms;
  std::vector<nn::Var> pi_targets;
  std::vector<nn::Var> pi_noisy;
  std::size_t pseudo_count = 0;

  for (const Dialogue* d : batch) {
    DialogueCursor cursor = start_dialogue(g, net);
    for (const auto& turn : d->turns) {
      TrackedTurn tracked = track_turn(g, net, sv, db, turn.user_ids, cursor);

      DstTargets targets;
      if (turn.labels) {
        targets = gold_targets(*turn.labels);
      } else if (config.mode == TrainingMode::pseudo) {
        targets = pseudo_label(tracked.prediction_values, config.nu);
        pseudo_count += targets.count();
      } else {
        targets.informable.resize(ontology.informable().size());
        targets.requestable.resize(ontology.requestable().size());
      }
      dst_terms.push_back(dst_loss(g, tracked.prediction, targets));

      auto logits = policy::teacher_forced_logits(g, net, tracked.z, tracked.gate0, turn.system_ids);
      gen_terms.push_back(gen_loss(g, logits, turn.system_ids));

      if (config.mode == TrainingMode::pi) {
        const bool gold = config.pi_target == PiTarget::gold;
        if (gold && !turn.labels) continue;
        auto noise = embedding_noise(turn.user_ids.size(), net.config().embed_dim, config.sigma, rng);
        auto noisy_seq = nn::encode_sequence(g, net.params(), turn.user_ids, noise);
        auto noisy = dst::predict_turn(g, net, sv, noisy_seq);
        std::vector<std::vector<double>> one_hot;
        if (gold) one_hot = one_hot_targets(*turn.labels, ontology);
        for (std::size_t s = 0; s < noisy.informable.size(); ++s) {
          nn::Var target = gold ? g.constant(one_hot[s]) : tracked.prediction.informable[s];
          if (!frozen_pi_targets.empty()) {
            target = g.constant(frozen_pi_targets[pi_targets.size()]);
          }
          pi_targets.push_back(target);
          pi_noisy.push_back(noisy.informable[s]);
        }
      }
    }
  }

  if (!frozen_pi_targets.empty() && frozen_pi_targets.size() != pi_targets.size()) {
    throw ContractError("batch_loss: frozen Pi targets do not match the batch");
  }
  BatchLoss out;
  for (nn::Var t : pi_targets) out.pi_target_values.push_back(g.values(t));
  out.l_dst = g.add_n(dst_terms);
  out.l_gen = g.add_n(gen_terms);
  out.l_pi = pi_loss(g, pi_targets, pi_noisy, config.alpha, batch.size());
  const nn::Var parts[] = {out.l_dst, out.l_gen, out.l_pi};
  out.total = g.add_n(parts);
  out.breakdown.l_dst = g.scalar(out.l_dst);
  out.breakdown.l_gen = g.scalar(out.l_gen);
  out.breakdown.l_pi = g.scalar(out.l_pi);
  out.breakdown.total = g.scalar(out.total);
  out.breakdown.pseudo_labels_used = pseudo_count;
  return out;
}

Json EpochRecord::to_json() const {
  return Json{{"epoch", epoch},
              {"l_dst", loss.l_dst},
              {"l_gen", loss.l_gen},
              {"l_pi", loss.l_pi},
              {"pseudo_count", loss.pseudo_labels_used},
              {"valid_joint_acc", valid_joint_acc},
              {"valid_success", valid_success}};
}

TrainingResult train(const TrainingConfig& config, const Corpus& corpus, const EntityDB& db,
                     const EpochCallback& on_epoch) {
  config.validate();
  const Corpus data = split_labelled(corpus, config.labelled_fraction, config.seed);
  std::vector<std::size_t> order = data.indices(Split::train);
  if (order.empty()) {
    throw TrainingError("train: corpus has no training dialogues");
  }
  const bool has_valid = !data.indices(Split::valid).empty();

  TrainingResult result{Network(data.ontology(), data.vocab(), config.model, config.seed), {}, 0, -1.0};
  Network& net = result.network;
  nn::ParameterStore best = net.params();
  std::mt19937_64 rng(config.seed);
  // Separate stream so every mode sees the same dialogue order for a seed.
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  nn::Adam adam(config.learning_rate);
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t start = 0, b = 0; start < order.size(); start += config.batch_size, ++b) {
      std::vector<const Dialogue*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&data.dialogues()[order[i]]);
      }
      net.params().zero_grad();
      nn::Graph g;
      BatchLoss loss = batch_loss(g, net, db, batch, config, noise_rng);
      if (!std::isfinite(loss.breakdown.total)) {
        throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b) + " (first dialogue " + batch.front()->id + ")");
      }
      g.backward(loss.total);
      net.params().clip_grad_norm(config.clip_norm);
      if (config.optimizer == OptimizerKind::adam) {
        adam.step(net.params());
      } else {
        net.params().sgd_step(config.learning_rate);
      }
      record.loss += loss.breakdown;
    }
    if (!net.params().all_finite()) {
      throw TrainingError("parameters became non-finite in epoch " + std::to_string(epoch));
    }

    if (has_valid) {
      const MetricsReport valid = evaluate(net, data, db, Split::valid);
      record.valid_joint_acc = valid.joint_goal_accuracy;
      record.valid_success = valid.success_rate;
    }
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!has_valid || record.valid_joint_acc > result.best_valid_joint_acc) {
      result.best_valid_joint_acc = record.valid_joint_acc;
      result.best_epoch = epoch;
      best.assign_values(net.params());
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  net.params().assign_values(best);
  return result;
}

}  // namespace semidial
