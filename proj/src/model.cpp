#include "semidial/model.hpp"

#include <fstream>
#include <map>

#include "semidial/error.hpp"
#include "semidial/nn/layers.hpp"

namespace semidial {

namespace {

constexpr std::string_view kRequestValue = "<request>";

}  // namespace

std::string_view to_string(AttentionNorm a) { return a == AttentionNorm::softmax ? "softmax" : "none"; }

std::string_view to_string(PolicyInjection p) {
  return p == PolicyInjection::init ? "init" : "every_step";
}

AttentionNorm attention_norm_from_string(std::string_view s) {
  if (s == "softmax") return AttentionNorm::softmax;
  if (s == "none") return AttentionNorm::none;
  throw ConfigError("attention_normalize must be softmax or none, got '" + std::string(s) + "'");
}

PolicyInjection policy_injection_from_string(std::string_view s) {
  if (s == "init") return PolicyInjection::init;
  if (s == "every_step") return PolicyInjection::every_step;
  throw ConfigError("policy_injection must be init or every_step, got '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || slot_embed_dim == 0 || policy_dim == 0 ||
      decoder_hidden_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (max_decode_len == 0) {
    throw ConfigError("max_decode_len must be at least 1");
  }
  if (!(init_range > 0.0)) {
    throw ConfigError("init_range must be positive");
  }
}

Json ModelConfig::to_json() const {
  return Json{{"embed_dim", embed_dim},
              {"hidden_dim", hidden_dim},
              {"slot_embed_dim", slot_embed_dim},
              {"policy_dim", policy_dim},
              {"decoder_hidden_dim", decoder_hidden_dim},
              {"max_decode_len", max_decode_len},
              {"init_range", init_range},
              {"attention_normalize", std::string(to_string(attention))},
              {"keep_rule", std::string(to_string(keep_rule))},
              {"policy_injection", std::string(to_string(policy_injection))}};
}

ModelConfig ModelConfig::from_json(const Json& j) {
  ModelConfig c;
  try {
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.slot_embed_dim = j.value("slot_embed_dim", c.slot_embed_dim);
    c.policy_dim = j.value("policy_dim", c.policy_dim);
    c.decoder_hidden_dim = j.value("decoder_hidden_dim", c.decoder_hidden_dim);
    c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
    c.init_range = j.value("init_range", c.init_range);
    if (j.contains("attention_normalize")) {
      c.attention = attention_norm_from_string(j.at("attention_normalize").get<std::string>());
    }
    if (j.contains("keep_rule")) {
      c.keep_rule = keep_rule_from_string(j.at("keep_rule").get<std::string>());
    }
    if (j.contains("policy_injection")) {
      c.policy_injection = policy_injection_from_string(j.at("policy_injection").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

Network::Network(Ontology ontology, Vocab vocab, ModelConfig config, std::uint64_t seed)
    : ontology_(std::move(ontology)),
      vocab_(std::move(vocab)),
      config_(config),
      params_(seed) {
  config_.validate();
  build_tables();
  create_parameters();
}

Network::Network(Ontology ontology, Vocab vocab, ModelConfig config, nn::ParameterStore params)
    : ontology_(std::move(ontology)),
      vocab_(std::move(vocab)),
      config_(config),
      params_(std::move(params)) {
  config_.validate();
  build_tables();
  check_parameters();
}

void Network::build_tables() {
  if (ontology_.informable().empty()) {
    throw ContractError("network: ontology has no informable slots");
  }
  std::map<std::string, std::size_t> slot_ids;
  std::map<std::string, std::size_t> value_ids;
  auto id_of = [](std::map<std::string, std::size_t>& table, const std::string& key) {
    auto [it, inserted] = table.emplace(key, table.size());
    return it->second;
  };
  // Specials first so they own ids 0 and 1 in the value table.
  id_of(value_ids, std::string(kNotMentionedValue));
  id_of(value_ids, std::string(kDontCareValue));

  sv_rows_.clear();
  inf_offsets_.clear();
  for (const auto& slot : ontology_.informable()) {
    inf_offsets_.push_back(sv_rows_.size());
    const std::size_t d = *ontology_.domain_index(slot.domain);
    const std::size_t s = id_of(slot_ids, slot.slot);
    for (const auto& v : slot.values) {
      sv_rows_.push_back({d, s, id_of(value_ids, v)});
    }
  }
  req_offset_ = sv_rows_.size();
  const std::size_t request_value = id_of(value_ids, std::string(kRequestValue));
  for (const auto& r : ontology_.requestable()) {
    sv_rows_.push_back({*ontology_.domain_index(r.domain), id_of(slot_ids, r.slot), request_value});
  }
  slot_names_ = slot_ids.size();
  value_names_ = value_ids.size();

  resets_.assign(vocab_.size(), {});
  for (std::size_t t = 0; t < vocab_.size(); ++t) {
    auto slot = placeholder_slot(vocab_.token(static_cast<int>(t)));
    if (!slot) {
      continue;
    }
    for (std::size_t r = 0; r < ontology_.requestable().size(); ++r) {
      if (ontology_.requestable()[r].slot == *slot) {
        resets_[t].push_back(r);
      }
    }
  }
}

std::span<const std::size_t> Network::gate_resets(int token) const {
  return resets_.at(static_cast<std::size_t>(token));
}

std::size_t Network::policy_input_dim() const {
  return ontology_.belief_size() + config_.state_dim() + kQueryBins;
}

void Network::create_parameters() {
  const double r = config_.init_range;
  const std::size_t V = vocab_.size();
  const std::size_t E = config_.embed_dim;
  const std::size_t H = config_.hidden_dim;
  const std::size_t S = config_.slot_embed_dim;
  const std::size_t Z = config_.policy_dim;
  const std::size_t Hd = config_.decoder_hidden_dim;
  const std::size_t A = std::max<std::size_t>(ontology_.requestable().size(), 1);
  const std::size_t dec_in = E + (config_.policy_injection == PolicyInjection::every_step ? Z : 0);

  params_.add(std::string(nn::names::kWordEmbedding), V, E, r);
  params_.add(std::string(nn::names::kEncoderFwdW), 4 * H, E + H, r);
  params_.add(std::string(nn::names::kEncoderFwdB), 4 * H, 1, r);
  params_.add(std::string(nn::names::kEncoderBwdW), 4 * H, E + H, r);
  params_.add(std::string(nn::names::kEncoderBwdB), 4 * H, 1, r);

  params_.add("dst.domain", ontology_.domains().size(), S, r);
  params_.add("dst.slot", slot_names_, S, r);
  params_.add("dst.value", value_names_, S, r);
  params_.add("dst.sv.W", 2 * H, 3 * S, r);
  params_.add("dst.sv.b", 2 * H, 1, r);

  params_.add("policy.W", Z, policy_input_dim(), r);
  params_.add("policy.b", Z, 1, r);

  params_.add("decoder.init.W", Hd, Z, r);
  params_.add("decoder.init.b", Hd, 1, r);
  params_.add(std::string(nn::names::kDecoderEmbedding), V, E, r);
  params_.add(std::string(nn::names::kDecoderW), 4 * Hd, dec_in + Hd, r);
  params_.add(std::string(nn::names::kDecoderB), 4 * Hd, 1, r);
  params_.add(std::string(nn::names::kDecoderReadW), A, dec_in + Hd, r);
  params_.add(std::string(nn::names::kDecoderReadB), A, 1, r);
  params_.add(std::string(nn::names::kDecoderSlotW), Hd, A, r);
  params_.add(std::string(nn::names::kDecoderOutW), V, Hd, r);
  params_.add(std::string(nn::names::kDecoderOutB), V, 1, r);
}

void Network::check_parameters() const {
  Network reference(ontology_, vocab_, config_, params_.seed());
  if (reference.params_.names() != params_.names()) {
    throw LoadError("checkpoint: parameter set does not match the model layout");
  }
  for (const auto& name : params_.names()) {
    const auto& a = reference.params_.get(name);
    const auto& b = params_.get(name);
    if (a.rows != b.rows || a.cols != b.cols) {
      throw LoadError("checkpoint: parameter '" + name + "' has shape " +
                      std::to_string(b.rows) + "x" + std::to_string(b.cols) + ", expected " +
                      std::to_string(a.rows) + "x" + std::to_string(a.cols));
    }
  }
}

void Network::save_checkpoint(const std::filesystem::path& path) const {
  Json j = {{"version", kCheckpointVersion},
            {"config", config_.to_json()},
            {"ontology", ontology_.to_json()},
            {"vocab", vocab_.tokens()},
            {"params", params_.to_json()}};
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write checkpoint " + path.string());
  }
  out << j.dump() << '\n';
}

Network Network::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open checkpoint " + path.string());
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError("checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.contains("version")) {
    throw LoadError("checkpoint: missing version field");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw LoadError("checkpoint: unsupported version " + j.at("version").dump());
  }
  try {
    return Network(Ontology::from_json(j.at("ontology")),
                   Vocab(j.at("vocab").get<std::vector<std::string>>()),
                   ModelConfig::from_json(j.at("config")),
                   nn::ParameterStore::from_json(j.at("params")));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

Network Network::load_checkpoint(const std::filesystem::path& path, const Ontology& expected) {
  Network net = load_checkpoint(path);
  if (!(net.ontology() == expected)) {
    throw LoadError("checkpoint " + path.string() + " was trained on a different ontology");
  }
  return net;
}

}  // namespace semidial
