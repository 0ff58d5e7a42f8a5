#include <doctest.h>

#include <cmath>
#include <limits>

#include "semidial/error.hpp"
#include "semidial/nn/grad_check.hpp"
#include "semidial/trainer.hpp"
#include "support.hpp"

using namespace semidial;

namespace {

const ToyData& toy20() {
  static const ToyData data = generate_toy_corpus(testing::small_toy(20, 3));
  return data;
}

// Training dialogues cut to two turns each.
std::vector<Dialogue> two_turn_batch(const Corpus& corpus, std::size_t n) {
  std::vector<Dialogue> out;
  for (std::size_t i : corpus.indices(Split::train)) {
    if (out.size() == n) break;
    Dialogue d = corpus.dialogues()[i];
    d.turns.resize(std::min<std::size_t>(2, d.turns.size()));
    out.push_back(d);
  }
  return out;
}

std::vector<const Dialogue*> pointers(const std::vector<Dialogue>& ds) {
  std::vector<const Dialogue*> out;
  for (const auto& d : ds) out.push_back(&d);
  return out;
}

std::vector<double> gradients(Network& net, const EntityDB& db, std::span<const Dialogue* const> batch,
                              const TrainingConfig& c, std::uint64_t noise_seed) {
  net.params().zero_grad();
  nn::Graph g;
  std::mt19937_64 rng(noise_seed);
  g.backward(batch_loss(g, net, db, batch, c, rng).total);
  std::vector<double> out;
  for (const auto& name : net.params().names()) {
    const auto& grad = net.params().get(name).grad;
    out.insert(out.end(), grad.begin(), grad.end());
  }
  return out;
}

std::string log_dump(const TrainingResult& r) {
  Json j = Json::array();
  for (const auto& e : r.log) j.push_back(e.to_json());
  return j.dump();
}

}  // namespace

TEST_CASE("training config JSON round trip and validation") {
  TrainingConfig c = testing::quick_config(TrainingMode::pi, 7);
  c.nu = 0.75;
  c.pi_target = PiTarget::gold;
  c.optimizer = OptimizerKind::sgd;
  const auto back = TrainingConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(TrainingConfig::from_json(Json::object()).to_json() == TrainingConfig{}.to_json());
  CHECK_THROWS_AS(TrainingConfig::from_json(Json{{"nu", 1.5}}), ConfigError);
  CHECK_THROWS_AS(TrainingConfig::from_json(Json{{"mode", "teacher"}}), ConfigError);
  CHECK_THROWS_AS(TrainingConfig::from_json(Json{{"batch_size", 0}}), ConfigError);
  CHECK_THROWS_AS(TrainingConfig::from_json(Json{{"sigma", -1.0}}), ConfigError);
  CHECK_THROWS_AS(TrainingConfig::from_json(Json{{"epochs", "many"}}), ConfigError);
}

TEST_CASE("joint loss is the sum of its parts") {
  const auto& data = toy20();
  const auto batch_dialogues = two_turn_batch(data.corpus, 3);
  const auto batch = pointers(batch_dialogues);
  for (TrainingMode mode : {TrainingMode::baseline, TrainingMode::pseudo, TrainingMode::pi}) {
    TrainingConfig c = testing::quick_config(mode, 1);
    Network net(data.corpus.ontology(), data.corpus.vocab(), c.model, 4);
    nn::Graph g;
    std::mt19937_64 rng(1);
    const auto loss = batch_loss(g, net, data.db, batch, c, rng);
    CHECK(loss.breakdown.total == doctest::Approx(loss.breakdown.l_dst + loss.breakdown.l_gen + loss.breakdown.l_pi).epsilon(1e-12));
    CHECK(loss.breakdown.l_dst > 0.0);
    CHECK(loss.breakdown.l_gen > 0.0);
    CHECK((mode == TrainingMode::pi) == (loss.breakdown.l_pi > 0.0));
  }
}

TEST_CASE("each loss and the joint loss pass the gradient check on a two-turn batch") {
  const auto& data = toy20();
  const auto batch_dialogues = two_turn_batch(data.corpus, 2);
  const auto batch = pointers(batch_dialogues);
  TrainingConfig c = testing::quick_config(TrainingMode::pi, 1);
  c.model = testing::tiny_model();
  Network net(data.corpus.ontology(), data.corpus.vocab(), c.model, 5);

  std::vector<std::vector<double>> frozen;
  {
    nn::Graph g;
    std::mt19937_64 rng(9);
    frozen = batch_loss(g, net, data.db, batch, c, rng).pi_target_values;
  }
  auto part = [&](int which) {
    return [&, which](nn::Graph& g) {
      std::mt19937_64 rng(9);
      auto l = batch_loss(g, net, data.db, batch, c, rng, frozen);
      switch (which) {
        case 0: return l.l_dst;
        case 1: return l.l_gen;
        case 2: return l.l_pi;
        default: return l.total;
      }
    };
  };
  for (int which = 0; which < 4; ++which) {
    const auto r = nn::grad_check(part(which), net.params(), 1e-4);
    INFO("part " << which << " worst " << r.worst_parameter << "[" << r.worst_index << "] analytic "
                 << r.worst_analytic << " numeric " << r.worst_numeric);
    CHECK(r.passed);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("stop-gradient makes the live Pi target match a frozen one") {
  const auto& data = toy20();
  const auto batch_dialogues = two_turn_batch(data.corpus, 2);
  const auto batch = pointers(batch_dialogues);
  TrainingConfig c = testing::quick_config(TrainingMode::pi, 1);
  Network net(data.corpus.ontology(), data.corpus.vocab(), c.model, 6);
  const auto live = gradients(net, data.db, batch, c, 2);
  std::vector<std::vector<double>> frozen;
  {
    nn::Graph g;
    std::mt19937_64 rng(2);
    frozen = batch_loss(g, net, data.db, batch, c, rng).pi_target_values;
  }
  net.params().zero_grad();
  nn::Graph g;
  std::mt19937_64 rng(2);
  g.backward(batch_loss(g, net, data.db, batch, c, rng, frozen).total);
  std::size_t k = 0;
  for (const auto& name : net.params().names()) {
    for (double x : net.params().get(name).grad) {
      CHECK(x == doctest::Approx(live[k]).epsilon(1e-12).scale(1e-12));
      ++k;
    }
  }
}

TEST_CASE("pseudo mode with threshold one reproduces baseline gradients exactly") {
  const auto& data = toy20();
  const Corpus half = split_labelled(data.corpus, 0.5, 3);
  std::vector<const Dialogue*> batch;
  for (std::size_t i : half.indices(Split::train)) batch.push_back(&half.dialogues()[i]);
  TrainingConfig base = testing::quick_config(TrainingMode::baseline, 1);
  TrainingConfig pseudo = base;
  pseudo.mode = TrainingMode::pseudo;
  pseudo.nu = 1.0;
  Network net(half.ontology(), half.vocab(), base.model, 7);
  const auto a = gradients(net, data.db, batch, base, 1);
  const auto b = gradients(net, data.db, batch, pseudo, 1);
  CHECK(a == b);
  pseudo.nu = 0.0;
  CHECK(gradients(net, data.db, batch, pseudo, 1) != a);
}

TEST_CASE("unlabelled turns contribute no tracker loss in baseline mode") {
  const auto& data = toy20();
  const Corpus none = split_labelled(data.corpus, 0.0, 3);
  std::vector<const Dialogue*> batch;
  for (std::size_t i : none.indices(Split::train)) batch.push_back(&none.dialogues()[i]);
  TrainingConfig c = testing::quick_config(TrainingMode::baseline, 1);
  Network net(none.ontology(), none.vocab(), c.model, 8);
  nn::Graph g;
  std::mt19937_64 rng(1);
  const auto loss = batch_loss(g, net, data.db, batch, c, rng);
  CHECK(loss.breakdown.l_dst == 0.0);
  CHECK(loss.breakdown.l_gen > 0.0);
  CHECK(loss.breakdown.pseudo_labels_used == 0);
}

TEST_CASE("training reduces the loss on a small corpus") {
  TrainingConfig c = testing::quick_config(TrainingMode::baseline, 30);
  c.patience = 30;
  const auto r = train(c, toy20().corpus, toy20().db);
  REQUIRE(r.log.size() == 30);
  CHECK(r.log.back().loss.total < 0.5 * r.log.front().loss.total);
  CHECK(r.best_epoch >= 1);
}

TEST_CASE("Pi loss vanishes without noise or weight") {
  for (auto [sigma, alpha] : {std::pair{0.0, 1.0}, std::pair{0.1, 0.0}}) {
    TrainingConfig c = testing::quick_config(TrainingMode::pi, 3);
    c.sigma = sigma;
    c.alpha = alpha;
    c.labelled_fraction = 0.5;
    const auto r = train(c, toy20().corpus, toy20().db);
    for (const auto& e : r.log) CHECK(e.loss.l_pi == 0.0);
  }
}

TEST_CASE("training runs are deterministic") {
  for (TrainingMode mode : {TrainingMode::baseline, TrainingMode::pseudo, TrainingMode::pi}) {
    TrainingConfig c = testing::quick_config(mode, 3);
    c.labelled_fraction = 0.5;
    c.nu = 0.6;
    const auto a = train(c, toy20().corpus, toy20().db);
    const auto b = train(c, toy20().corpus, toy20().db);
    CHECK(log_dump(a) == log_dump(b));
    CHECK(a.network.params().names() == b.network.params().names());
    for (const auto& name : a.network.params().names()) {
      CHECK(a.network.params().get(name).value == b.network.params().get(name).value);
    }
  }
}

TEST_CASE("training failures raise TrainingError") {
  ToyData data = toy20();
  std::vector<Dialogue> held_out;
  for (const auto& d : data.corpus.dialogues()) {
    if (d.split != Split::train) held_out.push_back(d);
  }
  const Corpus no_train(data.corpus.ontology(), held_out);
  TrainingConfig c = testing::quick_config(TrainingMode::baseline, 1);
  CHECK_THROWS_AS(train(c, no_train, data.db), TrainingError);

  c.optimizer = OptimizerKind::sgd;
  c.learning_rate = 1e300;
  c.clip_norm = 1e300;
  c.epochs = 5;
  CHECK_THROWS_AS(train(c, data.corpus, data.db), TrainingError);
}
