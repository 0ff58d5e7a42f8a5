#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semidial/corpus.hpp"
#include "semidial/kb.hpp"

namespace semidial {

// Synthetic restaurant / hotel / attraction booking dialogues.
struct ToyCorpusSpec {
  std::size_t dialogues = 500;
  std::uint64_t seed = 7;
  std::vector<std::string> domains = {"restaurant", "hotel", "attraction"};
  std::size_t entities_per_domain = 40;
  double zipf_exponent = 1.0;           // skew of entity attribute values
  double change_probability = 0.2;      // user first asks for something unavailable
  double multi_domain_probability = 0.0;
  double request_probability = 0.4;     // per requestable slot of the goal domain
  double valid_fraction = 0.1;
  double test_fraction = 0.1;

  void validate() const;
  Json to_json() const;
  static ToyCorpusSpec from_json(const Json& j);
};

struct ToyData {
  Corpus corpus;
  EntityDB db;
};

Ontology toy_ontology(const std::vector<std::string>& domains);

ToyData generate_toy_corpus(const ToyCorpusSpec& spec);

}  // namespace semidial
