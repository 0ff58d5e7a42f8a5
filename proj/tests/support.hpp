#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "semidial/corpus.hpp"
#include "semidial/model.hpp"
#include "semidial/toy_corpus.hpp"
#include "semidial/trainer.hpp"

namespace testing {

using namespace semidial;

// hotel: pricerange {cheap, expensive}, area {north, south}; restaurant: food
// {thai, italian, indian}. Requestables hotel-phone, restaurant-phone,
// restaurant-address.
inline Ontology tiny_ontology() {
  Ontology o;
  o.add_domain("hotel");
  o.add_domain("restaurant");
  o.add_informable("hotel", "pricerange", {"cheap", "expensive"});
  o.add_informable("hotel", "area", {"north", "south"});
  o.add_informable("restaurant", "food", {"thai", "italian", "indian"});
  o.add_requestable("hotel", "phone");
  o.add_requestable("restaurant", "phone");
  o.add_requestable("restaurant", "address");
  return o;
}

inline ModelConfig tiny_model() {
  ModelConfig m;
  m.embed_dim = 4;
  m.hidden_dim = 3;
  m.slot_embed_dim = 3;
  m.policy_dim = 4;
  m.decoder_hidden_dim = 5;
  m.max_decode_len = 12;
  m.init_range = 0.3;
  return m;
}

inline ToyCorpusSpec small_toy(std::size_t dialogues, std::uint64_t seed = 7) {
  ToyCorpusSpec s;
  s.dialogues = dialogues;
  s.seed = seed;
  s.entities_per_domain = 12;
  return s;
}

inline TrainingConfig quick_config(TrainingMode mode, std::size_t epochs) {
  TrainingConfig c;
  c.mode = mode;
  c.epochs = epochs;
  c.model = tiny_model();
  c.model.embed_dim = 8;
  c.model.hidden_dim = 8;
  c.model.slot_embed_dim = 8;
  c.model.policy_dim = 8;
  c.model.decoder_hidden_dim = 8;
  c.model.init_range = 0.08;
  c.batch_size = 4;
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("semidial_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (double& x : p) total += (x = u(rng));
  for (double& x : p) x /= total;
  return p;
}

}  // namespace testing
