#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "semidial/error.hpp"
#include "semidial/metrics.hpp"
#include "support.hpp"

using namespace semidial;

namespace {

const ToyData& toy() {
  static const ToyData data = [] {
    auto spec = testing::small_toy(100, 21);
    spec.multi_domain_probability = 0.3;
    return generate_toy_corpus(spec);
  }();
  return data;
}

}  // namespace

TEST_CASE("joint goal accuracy hand examples") {
  const std::vector<StateTrajectory> gold = {{{2, 3}, {2, 4}}};
  CHECK(joint_goal_accuracy(gold, gold) == 1.0);
  const std::vector<StateTrajectory> one_wrong = {{{2, 3}, {2, 5}}};
  CHECK(joint_goal_accuracy(one_wrong, gold) == 0.5);
  const std::vector<StateTrajectory> empty = {{{0, 0}, {0, 0}}};
  CHECK(joint_goal_accuracy(empty, gold) == 0.0);
  const std::vector<StateTrajectory> short_pred = {{{2, 3}}};
  CHECK_THROWS_AS(joint_goal_accuracy(short_pred, gold), ContractError);
}

TEST_CASE("gold trajectory accumulates labels") {
  Dialogue d;
  d.id = "g";
  for (auto inf : std::vector<std::vector<int>>{{2, 0}, {0, 3}, {1, 0}, {3, 0}}) {
    Turn t;
    t.labels = TurnLabels{inf, {}};
    d.turns.push_back(t);
  }
  CHECK(gold_trajectory(d) == StateTrajectory{{2, 0}, {2, 3}, {2, 3}, {3, 3}});
  CHECK(gold_trajectory(d, KeepRule::not_mentioned_only) == StateTrajectory{{2, 0}, {2, 3}, {1, 3}, {3, 3}});
  // Nothing predicted: right until the first slot is set, wrong afterwards.
  const std::vector<StateTrajectory> empty = {StateTrajectory(4, {0, 0})};
  const std::vector<StateTrajectory> gold = {gold_trajectory(d)};
  CHECK(joint_goal_accuracy(empty, gold) == 0.0);
  d.turns[1].labels.reset();
  CHECK_THROWS_AS(gold_trajectory(d), ContractError);
}

TEST_CASE("joint goal accuracy agrees with the brute-force oracle") {
  const auto& corpus = toy().corpus;
  std::mt19937_64 rng(3);
  std::vector<StateTrajectory> pred, gold;
  std::vector<std::vector<std::vector<int>>> opred, ogold;
  for (const auto& d : corpus.dialogues()) {
    const auto g = oracle::gold_states(d);
    CHECK(gold_trajectory(d) == g);
    const auto p = oracle::corrupt(g, corpus.ontology(), 0.05, rng);
    gold.push_back(g);
    pred.push_back(p);
    ogold.push_back(g);
    opred.push_back(p);
    // Per dialogue, so a disagreement is caught even when totals coincide.
    const StateTrajectory gp[] = {p}, gg[] = {g};
    CHECK(joint_goal_accuracy(gp, gg) == oracle::joint_accuracy({p}, {g}));
  }
  REQUIRE(pred.size() == 100);
  const double jga = joint_goal_accuracy(pred, gold);
  CHECK(jga == oracle::joint_accuracy(opred, ogold));
  CHECK(jga > 0.0);
  CHECK(jga < 1.0);

  std::vector<std::size_t> order(pred.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<StateTrajectory> sp, sg;
  for (std::size_t i : order) {
    sp.push_back(pred[i]);
    sg.push_back(gold[i]);
  }
  CHECK(joint_goal_accuracy(sp, sg) == doctest::Approx(jga).epsilon(1e-15));
}

TEST_CASE("success hand examples") {
  EntityDB db;
  db.add({"h1", "hotel", {{"name", "alpha"}, {"pricerange", "cheap"}, {"area", "north"}, {"phone", "1"}}});
  db.add({"h2", "hotel", {{"name", "beta"}, {"pricerange", "expensive"}, {"area", "north"}, {"phone", "2"}}});
  Dialogue d;
  d.domains = {"hotel"};
  d.goal.constraints = {{"hotel", "pricerange", "cheap"}};
  d.goal.requests = {{"hotel", "phone"}};
  GenerationResult offer;
  offer.delex_tokens = {"[value_name]", "is", "cheap", "<eos>"};
  offer.offered_entity_id = "h1";
  offer.offered_domain = "hotel";
  GenerationResult phone;
  phone.delex_tokens = {"[value_phone]", "<eos>"};
  CHECK(success(d, std::vector<GenerationResult>{offer, phone}, db));
  CHECK_FALSE(success(d, std::vector<GenerationResult>{offer}, db));
  offer.offered_entity_id = "h2";
  CHECK_FALSE(success(d, std::vector<GenerationResult>{offer, phone}, db));
  offer.offered_entity_id = "h9";
  CHECK_FALSE(success(d, std::vector<GenerationResult>{offer, phone}, db));
}

TEST_CASE("success agrees with the brute-force oracle") {
  const auto& data = toy();
  std::mt19937_64 rng(17);
  std::size_t agree = 0, positives = 0;
  for (const auto& d : data.corpus.dialogues()) {
    // Several output draws per dialogue so both outcomes are exercised.
    for (int k = 0; k < 5; ++k) {
      const auto outputs = oracle::random_outputs(d, data.db, rng);
      const bool expected = oracle::success(d, outputs, data.db);
      const bool got = success(d, outputs, data.db);
      CHECK(got == expected);
      agree += got == expected;
      positives += expected;
    }
  }
  CHECK(agree == 500);
  CHECK(positives > 10);
  CHECK(positives < 490);
}

TEST_CASE("frequency bucket boundaries") {
  const std::pair<std::size_t, std::string_view> cases[] = {
      {0, "0"},      {1, "1-5"},     {5, "1-5"},     {6, "6-10"}, {10, "6-10"},
      {11, "11-15"}, {15, "11-15"}, {16, "16-20"}, {20, "16-20"}, {21, ">20"}, {1000, ">20"}};
  for (const auto& [count, label] : cases) CHECK(FrequencyBuckets::bucket_of(count) == label);
}

TEST_CASE("bucket accuracy: weighted mean equals overall accuracy") {
  const auto& corpus = toy().corpus;
  const auto buckets = FrequencyBuckets::from_corpus(split_labelled(corpus, 0.5, 1));
  std::mt19937_64 rng(23);
  BucketAccumulator acc(buckets), perfect(buckets);
  for (const auto& d : corpus.dialogues()) {
    for (const auto& turn : d.turns) {
      TurnPrediction p, exact;
      for (std::size_t s = 0; s < corpus.ontology().informable().size(); ++s) {
        const std::size_t K = corpus.ontology().informable()[s].values.size();
        p.informable.push_back(testing::random_distribution(rng, K));
        std::vector<double> one(K, 0.0);
        one[static_cast<std::size_t>(turn.labels->informable[s])] = 1.0;
        exact.informable.push_back(one);
        if (rng() % 2 == 0) p.informable.back() = one;
      }
      acc.add(*turn.labels, p);
      perfect.add(*turn.labels, exact);
    }
  }
  const auto r = acc.result();
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [label, stat] : r.buckets) {
    CHECK(stat.total > 0);
    weighted += stat.accuracy() * static_cast<double>(stat.total);
    total += stat.total;
  }
  CHECK(total == r.overall.total);
  CHECK(std::abs(weighted / static_cast<double>(total) - r.overall.accuracy()) < 1e-9);
  for (const auto& [label, stat] : perfect.result().buckets) CHECK(stat.accuracy() == 1.0);
}

TEST_CASE("an unseen value only adds to the zero bucket's denominator") {
  Ontology o = testing::tiny_ontology();
  Corpus empty(o, {});
  const auto buckets = FrequencyBuckets::from_corpus(empty);
  BucketAccumulator acc(buckets);
  TurnLabels gold{{2, 0, 0}, {0, 0, 0}};
  TurnPrediction p;
  p.informable = {{0.1, 0.1, 0.1, 0.7}, {1, 0, 0, 0}, {1, 0, 0, 0, 0}};
  acc.add(gold, p);
  const auto r = acc.result();
  REQUIRE(r.buckets.size() == 1);
  CHECK(r.buckets.at("0").total == 1);
  CHECK(r.buckets.at("0").correct == 0);
}

TEST_CASE("per-domain success") {
  std::vector<Dialogue> ds(5);
  ds[0].domains = {"hotel"};
  ds[1].domains = {"hotel"};
  ds[2].domains = {"restaurant"};
  ds[3].domains = {"restaurant"};
  ds[4].domains = {"restaurant"};
  const std::vector<bool> ok = {true, false, true, true, false};
  const auto m = per_domain_success(ds, ok);
  CHECK(m.at("hotel") == 0.5);
  CHECK(m.at("restaurant") == doctest::Approx(2.0 / 3.0));
  CHECK(m.count("attraction") == 0);
  // Disjoint groups: the size-weighted mean is the overall rate.
  CHECK((2 * m.at("hotel") + 3 * m.at("restaurant")) / 5 == doctest::Approx(3.0 / 5.0));

  const std::vector<Dialogue> single(ds.begin(), ds.begin() + 2);
  const auto one = per_domain_success(single, {true, false});
  CHECK(one.size() == 1);
  CHECK(one.at("hotel") == 0.5);

  ds[1].domains = {"hotel", "restaurant"};
  const auto multi = per_domain_success(ds, {true, true, false, false, false});
  CHECK(multi.at("hotel") == 1.0);
  CHECK(multi.at("restaurant") == 0.25);
  CHECK_THROWS_AS(per_domain_success(ds, {true}), ContractError);
}
