#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semidial/belief.hpp"
#include "semidial/corpus.hpp"

namespace semidial {

inline constexpr std::size_t kQueryBins = 5;

// One-hot over match counts {0, 1, 2, 3, >3}.
using DBQueryVector = std::array<double, kQueryBins>;

std::size_t match_bin(std::size_t count);
DBQueryVector query_vector(std::size_t count);

class EntityDB {
 public:
  EntityDB() = default;

  // Validates field values against the ontology's closed value sets.
  static EntityDB from_json(const Json& j, const Ontology& ontology);
  static EntityDB load(const std::filesystem::path& path, const Ontology& ontology);
  Json to_json() const;
  void save(const std::filesystem::path& path) const;

  void add(Entity entity);

  bool has_domain(std::string_view domain) const;
  const std::vector<Entity>& records(std::string_view domain) const;
  std::vector<std::string> domains() const;
  const Entity* find(std::string_view domain, std::string_view id) const;

  // Records of the domain whose field equals the value for every constraint.
  std::vector<const Entity*> match(std::string_view domain,
                                   const std::map<std::string, std::string>& constraints) const;

  bool operator==(const EntityDB&) const = default;

 private:
  std::map<std::string, std::vector<Entity>> records_;
};

struct QueryResult {
  std::vector<const Entity*> matches;
  DBQueryVector q{};
};

// Concrete-valued belief argmaxes of the domain's slots become equality
// constraints; not-mentioned and dont-care constrain nothing.
std::map<std::string, std::string> belief_constraints(const BeliefState& belief,
                                                      const Ontology& ontology,
                                                      std::string_view domain);

QueryResult query(const EntityDB& db, const BeliefState& belief, const Ontology& ontology,
                  std::string_view domain);

// Lowest record id wins; nullptr when there is nothing to choose from.
const Entity* select_entity(std::span<const Entity* const> matching);

}  // namespace semidial
