#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semidial/belief.hpp"
#include "semidial/corpus.hpp"
#include "semidial/dialogue.hpp"
#include "semidial/kb.hpp"
#include "semidial/model.hpp"

namespace semidial {

// Value index per informable slot, per turn.
using StateTrajectory = std::vector<std::vector<int>>;

// Accumulated gold state: turn labels folded with the same keep rule the
// tracker uses. Every turn must be labelled.
StateTrajectory gold_trajectory(const Dialogue& dialogue, KeepRule rule = KeepRule::literal);

// Fraction of turns whose every slot matches, over all dialogues.
double joint_goal_accuracy(std::span<const StateTrajectory> predicted,
                           std::span<const StateTrajectory> gold);

// An entity satisfying the goal was offered for every goal domain, and every
// requested slot's placeholder was produced.
bool success(const Dialogue& dialogue, std::span<const GenerationResult> outputs,
             const EntityDB& db);

// Goal domains: the dialogue's domain tags plus any domain named by the goal.
std::vector<std::string> goal_domains(const Dialogue& dialogue);

class FrequencyBuckets {
 public:
  static constexpr std::array<std::string_view, 6> kLabels = {"0",     "1-5",   "6-10",
                                                              "11-15", "16-20", ">20"};

  // Counts values (other than not-mentioned) over labelled training turns.
  static FrequencyBuckets from_corpus(const Corpus& corpus);

  static std::string_view bucket_of(std::size_t count);
  std::size_t count(std::size_t slot, int value) const;
  std::string_view bucket(std::size_t slot, int value) const { return bucket_of(count(slot, value)); }
  const std::map<std::pair<std::size_t, int>, std::size_t>& counts() const { return counts_; }

 private:
  std::map<std::pair<std::size_t, int>, std::size_t> counts_;
};

struct BucketStat {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct BucketAccuracy {
  std::map<std::string, BucketStat> buckets;  // empty buckets absent
  BucketStat overall;
};

// Turn-level instances: every gold label other than not-mentioned, judged by
// the argmax of the turn prediction for its slot.
class BucketAccumulator {
 public:
  explicit BucketAccumulator(const FrequencyBuckets& buckets) : buckets_(buckets) {}
  void add(const TurnLabels& gold, const TurnPrediction& pred);
  BucketAccuracy result() const { return acc_; }

 private:
  const FrequencyBuckets& buckets_;
  BucketAccuracy acc_;
};

// Mean success within each tagged domain; multi-domain dialogues count in each.
std::map<std::string, double> per_domain_success(std::span<const Dialogue> dialogues,
                                                 const std::vector<bool>& successes);

struct MetricsReport {
  double joint_goal_accuracy = 0.0;
  double success_rate = 0.0;
  std::map<std::string, double> bucket_accuracy;
  std::map<std::string, std::size_t> bucket_sizes;
  double slot_value_accuracy = 0.0;
  std::map<std::string, double> per_domain_success;
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::size_t lexicalization_failures = 0;

  Json to_json() const;
};

// Runs the system over every dialogue of the split. bucket accuracy is only
// filled when buckets is given.
MetricsReport evaluate(Network& net, const Corpus& corpus, const EntityDB& db, Split split,
                       const FrequencyBuckets* buckets = nullptr);

}  // namespace semidial
