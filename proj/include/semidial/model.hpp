#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "semidial/belief.hpp"
#include "semidial/corpus.hpp"
#include "semidial/kb.hpp"
#include "semidial/nn/tensor.hpp"

namespace semidial {

enum class AttentionNorm { softmax, none };
enum class PolicyInjection { init, every_step };

std::string_view to_string(AttentionNorm a);
std::string_view to_string(PolicyInjection p);
AttentionNorm attention_norm_from_string(std::string_view s);
PolicyInjection policy_injection_from_string(std::string_view s);

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;  // per encoder direction; tracker states are 2x this
  std::size_t slot_embed_dim = 32;
  std::size_t policy_dim = 64;
  std::size_t decoder_hidden_dim = 64;
  std::size_t max_decode_len = 50;
  double init_range = 0.3;
  AttentionNorm attention = AttentionNorm::softmax;
  KeepRule keep_rule = KeepRule::literal;
  PolicyInjection policy_injection = PolicyInjection::init;

  std::size_t state_dim() const { return 2 * hidden_dim; }

  void validate() const;
  Json to_json() const;
  // Missing keys keep their defaults.
  static ModelConfig from_json(const Json& j);
};

// Parameters of the end-to-end model plus the lookup tables that tie them to
// an ontology and vocabulary.
class Network {
 public:
  static constexpr int kCheckpointVersion = 1;

  Network(Ontology ontology, Vocab vocab, ModelConfig config, std::uint64_t seed);
  Network(Ontology ontology, Vocab vocab, ModelConfig config, nn::ParameterStore params);

  const ModelConfig& config() const { return config_; }
  const Ontology& ontology() const { return ontology_; }
  const Vocab& vocab() const { return vocab_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // One row per slot-value pair: every informable value in ontology order,
  // then one row per requestable slot paired with the reserved value.
  struct SlotValueRow {
    std::size_t domain;
    std::size_t slot_name;
    std::size_t value_name;
  };
  const std::vector<SlotValueRow>& slot_value_rows() const { return sv_rows_; }
  // Row offset of each informable slot's block.
  const std::vector<std::size_t>& informable_offsets() const { return inf_offsets_; }
  std::size_t requestable_offset() const { return req_offset_; }

  // Gate-memory entries zeroed once a token has been emitted (placeholders).
  std::span<const std::size_t> gate_resets(int token) const;

  std::size_t policy_input_dim() const;

  void save_checkpoint(const std::filesystem::path& path) const;
  static Network load_checkpoint(const std::filesystem::path& path);
  // Also checks the checkpoint was trained against `expected`.
  static Network load_checkpoint(const std::filesystem::path& path, const Ontology& expected);

 private:
  void build_tables();
  void create_parameters();
  void check_parameters() const;

  Ontology ontology_;
  Vocab vocab_;
  ModelConfig config_;
  nn::ParameterStore params_;

  std::vector<SlotValueRow> sv_rows_;
  std::vector<std::size_t> inf_offsets_;
  std::size_t req_offset_ = 0;
  std::size_t slot_names_ = 0;
  std::size_t value_names_ = 0;
  std::vector<std::vector<std::size_t>> resets_;
};

}  // namespace semidial
