#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace semidial {

using Json = nlohmann::ordered_json;

// Every informable slot carries the two special values at fixed indices.
inline constexpr int kNotMentioned = 0;
inline constexpr int kDontCare = 1;
inline constexpr std::string_view kNotMentionedValue = "not-mentioned";
inline constexpr std::string_view kDontCareValue = "dont-care";

struct InformableSlot {
  std::string domain;
  std::string slot;
  std::vector<std::string> values;  // values[0] = not-mentioned, values[1] = dont-care

  std::string key() const { return domain + "-" + slot; }
  bool operator==(const InformableSlot&) const = default;
};

struct RequestableSlot {
  std::string domain;
  std::string slot;

  std::string key() const { return domain + "-" + slot; }
  bool operator==(const RequestableSlot&) const = default;
};

class Ontology {
 public:
  Ontology() = default;

  static Ontology from_json(const Json& j);
  static Ontology load(const std::filesystem::path& path);
  Json to_json() const;
  void save(const std::filesystem::path& path) const;

  void add_domain(const std::string& domain);
  // The special values are prepended; listing them explicitly is tolerated.
  void add_informable(const std::string& domain, const std::string& slot,
                      const std::vector<std::string>& values);
  void add_requestable(const std::string& domain, const std::string& slot);

  const std::vector<std::string>& domains() const { return domains_; }
  const std::vector<InformableSlot>& informable() const { return informable_; }
  const std::vector<RequestableSlot>& requestable() const { return requestable_; }

  std::optional<std::size_t> domain_index(std::string_view domain) const;
  std::optional<std::size_t> informable_index(std::string_view domain,
                                              std::string_view slot) const;
  std::optional<std::size_t> requestable_index(std::string_view domain,
                                               std::string_view slot) const;
  // Accepts the usual spellings of the special values ("dontcare", "none", ...).
  std::optional<int> value_index(std::size_t slot, std::string_view value) const;
  const std::string& value(std::size_t slot, int index) const;

  std::vector<std::size_t> informable_of(std::string_view domain) const;
  std::vector<std::size_t> requestable_of(std::string_view domain) const;

  // Total number of values over all informable slots, specials included.
  std::size_t belief_size() const;

  bool operator==(const Ontology&) const = default;

 private:
  std::vector<std::string> domains_;
  std::vector<InformableSlot> informable_;
  std::vector<RequestableSlot> requestable_;
};

// Canonical spelling of a value, mapping special-value aliases.
std::string normalize_value(std::string_view value);

class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kBosToken = "<bos>";
  static constexpr std::string_view kEosToken = "<eos>";

  Vocab();
  explicit Vocab(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  int index(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int index) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercase, split on whitespace, split off punctuation. Placeholders such
// as "[value_phone]" stay atomic.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

struct TurnLabels {
  std::vector<int> informable;   // one value index per ontology informable slot
  std::vector<int> requestable;  // 0/1 per ontology requestable slot

  bool operator==(const TurnLabels&) const = default;
};

struct Turn {
  std::vector<std::string> user_tokens;
  std::vector<std::string> system_tokens;  // delexicalized, ends with <eos>
  std::vector<int> user_ids;
  std::vector<int> system_ids;
  std::string domain;                 // active domain of the turn, may be empty
  std::optional<TurnLabels> labels;   // absent when the turn is unlabelled

  bool is_labelled() const { return labels.has_value(); }
  bool operator==(const Turn&) const = default;
};

struct GoalConstraint {
  std::string domain;
  std::string slot;
  std::string value;
  bool operator==(const GoalConstraint&) const = default;
};

struct GoalRequest {
  std::string domain;
  std::string slot;
  bool operator==(const GoalRequest&) const = default;
};

struct Goal {
  std::vector<GoalConstraint> constraints;
  std::vector<GoalRequest> requests;
  bool operator==(const Goal&) const = default;
};

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view s);

struct Dialogue {
  std::string id;
  std::vector<std::string> domains;
  std::vector<Turn> turns;
  Goal goal;
  Split split = Split::train;

  bool operator==(const Dialogue&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Builds the vocabulary in first-appearance order and encodes every turn.
  Corpus(Ontology ontology, std::vector<Dialogue> dialogues);

  const Ontology& ontology() const { return ontology_; }
  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  const Vocab& vocab() const { return vocab_; }

  std::vector<std::size_t> indices(Split split) const;

  Json to_json() const;
  static Corpus from_json(const Json& j, Ontology ontology);

  bool operator==(const Corpus&) const = default;

 private:
  Ontology ontology_;
  std::vector<Dialogue> dialogues_;
  Vocab vocab_;
};

Corpus load_corpus(const std::filesystem::path& path,
                   const std::filesystem::path& ontology_path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Keeps labels on exactly round(fraction * #train) training dialogues. The
// kept set for a smaller fraction is a prefix of the one for a larger fraction
// under the same seed.
Corpus split_labelled(const Corpus& corpus, double fraction, std::uint64_t seed);

// A database record. Field names double as slot names for delexicalization.
struct Entity {
  std::string id;
  std::string domain;
  std::map<std::string, std::string> fields;

  const std::string* field(std::string_view slot) const;
  bool operator==(const Entity&) const = default;
};

std::string placeholder(std::string_view slot);
std::optional<std::string> placeholder_slot(std::string_view token);

std::vector<std::string> delexicalize(std::span<const std::string> tokens, const Entity& entity,
                                      const Ontology& ontology);
std::vector<std::string> lexicalize(std::span<const std::string> tokens, const Entity& entity);

}  // namespace semidial
