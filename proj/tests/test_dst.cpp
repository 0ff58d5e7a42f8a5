#include <doctest.h>

#include <cmath>
#include <random>

#include "semidial/dst.hpp"
#include "semidial/error.hpp"
#include "support.hpp"

using namespace semidial;

namespace {

Network tiny_network(std::uint64_t seed = 1, Ontology o = testing::tiny_ontology()) {
  Vocab v;
  for (const char* t : {"i", "want", "a", "cheap", "hotel", "in", "the", "north", "thai", "food", "."}) {
    v.add(t);
  }
  return Network(std::move(o), v, testing::tiny_model(), seed);
}

nn::EncoderOutput fixed_hidden(std::size_t length, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  nn::EncoderOutput e;
  e.length = length;
  e.dim = dim;
  e.hidden.resize(length * dim);
  for (double& x : e.hidden) x = n(rng);
  e.final_state.resize(dim);
  for (double& x : e.final_state) x = n(rng);
  return e;
}

std::vector<double> sv_row(Network& net, std::size_t row) {
  nn::Graph g(false);
  nn::Var sv = dst::encode_slot_values(g, net);
  return g.values(g.row(sv, row));
}

}  // namespace

TEST_CASE("attend: hand-computed two-position example") {
  const std::vector<double> hidden = {1, 0, 0, 1};
  const std::vector<double> sv = {1, 0};
  const auto a = dst::attend(hidden, 2, sv);
  const double w1 = std::exp(1.0) / (std::exp(1.0) + std::exp(0.0));
  CHECK(a.weights[0] == doctest::Approx(w1).epsilon(1e-12));
  CHECK(a.weights[1] == doctest::Approx(1.0 - w1).epsilon(1e-12));
  CHECK(a.weights[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(a.context[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(a.context[1] == doctest::Approx(0.2689).epsilon(1e-4));

  const auto raw = dst::attend(hidden, 2, sv, AttentionNorm::none);
  CHECK(raw.weights == std::vector<double>{1.0, 0.0});
  CHECK(raw.context == std::vector<double>{1.0, 0.0});
}

TEST_CASE("attend: single position and zero query") {
  const std::vector<double> h = {0.3, -2.0, 5.0};
  const auto one = dst::attend(h, 1, std::vector<double>{4.0, 1.0, -1.0});
  CHECK(one.weights == std::vector<double>{1.0});
  CHECK(one.context == h);

  const std::vector<double> hidden = {1, 2, 3, 4, 5, 6};
  const auto z = dst::attend(hidden, 3, std::vector<double>{0.0, 0.0});
  for (double w : z.weights) CHECK(w == doctest::Approx(1.0 / 3.0));
  CHECK(z.context[0] == doctest::Approx(3.0));
  CHECK(z.context[1] == doctest::Approx(4.0));
  CHECK_THROWS_AS(dst::attend(hidden, 0, std::vector<double>{0.0, 0.0}), ContractError);
  CHECK_THROWS_AS(dst::attend(hidden, 2, std::vector<double>{0.0, 0.0}), ContractError);
}

TEST_CASE("attention weights form a distribution whose argmax survives positive scaling") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 1 + rng() % 6, d = 1 + rng() % 5;
    std::vector<double> h(L * d), sv(d);
    for (double& x : h) x = n(rng);
    for (double& x : sv) x = n(rng);
    const auto a = dst::attend(h, L, sv);
    double total = 0.0;
    for (double w : a.weights) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    std::vector<double> scaled = sv;
    const double c = 0.1 + 5.0 * std::abs(n(rng));
    for (double& x : scaled) x *= c;
    CHECK(argmax(dst::attend(h, L, scaled).weights) == argmax(a.weights));
  }
}

TEST_CASE("batched scoring agrees with per-value attention") {
  Network net = tiny_network(3);
  const auto enc = fixed_hidden(4, net.config().state_dim(), 5);
  const auto pred = dst::predict_turn(net, enc);
  const auto& o = net.ontology();
  for (std::size_t s = 0; s < o.informable().size(); ++s) {
    for (std::size_t k = 0; k < o.informable()[s].values.size(); ++k) {
      const auto sv = sv_row(net, net.informable_offsets()[s] + k);
      const auto a = dst::attend(enc.hidden, enc.length, sv);
      double score = 0.0;
      for (std::size_t i = 0; i < sv.size(); ++i) score += a.context[i] * sv[i];
      CHECK(pred.scores[s][k] == doctest::Approx(score).epsilon(1e-12));
      for (std::size_t l = 0; l < enc.length; ++l) {
        CHECK(pred.attention[s][k][l] == doctest::Approx(a.weights[l]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("predict_turn output shapes and ranges") {
  Network net = tiny_network(4);
  const auto pred = dst::predict_turn(net, fixed_hidden(5, net.config().state_dim(), 6));
  const auto& o = net.ontology();
  REQUIRE(pred.informable.size() == o.informable().size());
  CHECK(pred.informable[0].size() == 4);  // not-mentioned, dont-care, cheap, expensive
  for (std::size_t s = 0; s < pred.informable.size(); ++s) {
    CHECK(pred.informable[s].size() == o.informable()[s].values.size());
    double total = 0.0;
    for (double p : pred.informable[s]) total += p;
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
  REQUIRE(pred.requestable.size() == o.requestable().size());
  for (double p : pred.requestable) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("degenerate parameters give uniform distributions") {
  Network net = tiny_network(5);
  for (const char* name : {"dst.sv.W", "dst.sv.b"}) {
    auto& t = net.params().get(name);
    std::fill(t.value.begin(), t.value.end(), 0.0);
  }
  const auto pred = dst::predict_turn(net, fixed_hidden(3, net.config().state_dim(), 7));
  for (const auto& dist : pred.informable) {
    for (double p : dist) CHECK(p == doctest::Approx(1.0 / static_cast<double>(dist.size())));
  }
  for (double p : pred.requestable) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("hand-built encoding picks the value whose token it matches") {
  Network net = tiny_network(6);
  auto& p = net.params();
  for (const char* name : {"dst.domain", "dst.slot", "dst.value", "dst.sv.W", "dst.sv.b"}) {
    auto& t = p.get(name);
    std::fill(t.value.begin(), t.value.end(), 0.0);
  }
  // Value id 2 is "cheap" (specials take 0 and 1). Route its first embedding
  // coordinate to the first state coordinate.
  const std::size_t S = net.config().slot_embed_dim;
  p.get("dst.value").at(2, 0) = 1.0;
  p.get("dst.sv.W").at(0, 2 * S) = 3.0;

  const std::size_t D = net.config().state_dim();
  nn::EncoderOutput enc;
  enc.length = 3;
  enc.dim = D;
  enc.hidden.assign(3 * D, 0.0);
  enc.hidden[0 * D + 1] = 1.0;
  enc.hidden[1 * D + 0] = 3.0;  // the "cheap" token's state equals sv(cheap)
  enc.hidden[2 * D + 2] = 1.0;
  enc.final_state.assign(D, 0.0);
  const auto pred = dst::predict_turn(net, enc);
  const auto slot = *net.ontology().informable_index("hotel", "pricerange");
  CHECK(net.ontology().value(slot, argmax(pred.informable[slot])) == "cheap");
}

TEST_CASE("predictions permute with the ontology's value order") {
  Ontology swapped;
  swapped.add_domain("hotel");
  swapped.add_domain("restaurant");
  swapped.add_informable("hotel", "pricerange", {"expensive", "cheap"});
  swapped.add_informable("hotel", "area", {"north", "south"});
  swapped.add_informable("restaurant", "food", {"thai", "italian", "indian"});
  swapped.add_requestable("hotel", "phone");
  swapped.add_requestable("restaurant", "phone");
  swapped.add_requestable("restaurant", "address");

  Network a = tiny_network(7);
  Network b = tiny_network(7, swapped);
  b.params().assign_values(a.params());
  // Value ids follow first appearance, so "cheap" and "expensive" trade rows.
  auto& table = b.params().get("dst.value");
  for (std::size_t c = 0; c < table.cols; ++c) std::swap(table.at(2, c), table.at(3, c));

  const auto enc = fixed_hidden(4, a.config().state_dim(), 8);
  const auto pa = dst::predict_turn(a, enc);
  const auto pb = dst::predict_turn(b, enc);
  CHECK(pb.informable[0][0] == doctest::Approx(pa.informable[0][0]).epsilon(1e-12));
  CHECK(pb.informable[0][1] == doctest::Approx(pa.informable[0][1]).epsilon(1e-12));
  CHECK(pb.informable[0][2] == doctest::Approx(pa.informable[0][3]).epsilon(1e-12));
  CHECK(pb.informable[0][3] == doctest::Approx(pa.informable[0][2]).epsilon(1e-12));
  CHECK(pb.informable[2] == pa.informable[2]);
}

TEST_CASE("initial belief is one-hot on not-mentioned") {
  const auto b = initial_belief(testing::tiny_ontology());
  REQUIRE(b.slots.size() == 3);
  CHECK(b.slots[0] == std::vector<double>{1, 0, 0, 0});
  CHECK(b.slots[1] == std::vector<double>{1, 0, 0, 0});
  for (std::size_t s = 0; s < b.slots.size(); ++s) CHECK(b.argmax(s) == kNotMentioned);
}

TEST_CASE("belief update keeps or replaces per slot") {
  const Ontology o = testing::tiny_ontology();
  BeliefState prev = initial_belief(o);
  prev.slots[0] = {0.05, 0.05, 0.85, 0.05};  // peaked on cheap
  TurnPrediction pred;
  pred.informable = {{0.7, 0.1, 0.1, 0.1}, {0.1, 0.1, 0.2, 0.6}, {0.2, 0.5, 0.1, 0.1, 0.1}};
  const BeliefState before = prev;
  const auto next = update_belief(prev, pred);
  CHECK(next.slots[0] == prev.slots[0]);
  CHECK(next.slots[1] == pred.informable[1]);
  CHECK(next.slots[2] == prev.slots[2]);  // dont-care keeps under the literal rule
  CHECK(prev == before);

  const auto alt = update_belief(prev, pred, KeepRule::not_mentioned_only);
  CHECK(alt.slots[2] == pred.informable[2]);

  CHECK(update_belief(initial_belief(o), pred).slots[1] == pred.informable[1]);
  TurnPrediction all_nm;
  all_nm.informable = {{0.9, 0.1, 0, 0}, {0.6, 0.2, 0.1, 0.1}, {0.5, 0.1, 0.1, 0.2, 0.1}};
  CHECK(update_belief(initial_belief(o), all_nm) == initial_belief(o));

  TurnPrediction short_pred;
  short_pred.informable = {{1, 0, 0, 0}};
  CHECK_THROWS_AS(update_belief(prev, short_pred), ContractError);
}

TEST_CASE("beliefs stay normalised over many updates") {
  const Ontology o = testing::tiny_ontology();
  std::mt19937_64 rng(13);
  BeliefState b = initial_belief(o);
  for (int t = 0; t < 200; ++t) {
    TurnPrediction pred;
    for (const auto& s : o.informable()) pred.informable.push_back(testing::random_distribution(rng, s.values.size()));
    b = update_belief(b, pred);
    for (const auto& dist : b.slots) {
      double total = 0.0;
      for (double p : dist) total += p;
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("graph belief update matches the value form") {
  Network net = tiny_network(9);
  const std::vector<int> tokens = {3, 4, 6, 7};
  nn::Graph g;
  nn::Var sv = dst::encode_slot_values(g, net);
  auto enc = nn::encode_sequence(g, net.params(), tokens);
  auto pred = dst::predict_turn(g, net, sv, enc);
  BeliefState prev = initial_belief(net.ontology());
  prev.slots[1] = {0.1, 0.1, 0.7, 0.1};
  dst::BeliefVars prev_vars;
  for (const auto& d : prev.slots) prev_vars.push_back(g.constant(d));
  const auto values = dst::to_values(g, net, pred);
  for (KeepRule rule : {KeepRule::literal, KeepRule::not_mentioned_only}) {
    CHECK(dst::belief_values(g, dst::update_belief(g, prev_vars, pred, rule)) ==
          update_belief(prev, values, rule));
  }
  CHECK(dst::predict_turn(net, nn::encode_sequence(net.params(), tokens)).informable == values.informable);
}
