#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "semidial/nn/graph.hpp"
#include "semidial/nn/tensor.hpp"

namespace semidial::nn {

// Parameter names used by the building blocks below.
namespace names {
inline constexpr std::string_view kWordEmbedding = "embed.word";
inline constexpr std::string_view kEncoderFwdW = "encoder.fwd.W";
inline constexpr std::string_view kEncoderFwdB = "encoder.fwd.b";
inline constexpr std::string_view kEncoderBwdW = "encoder.bwd.W";
inline constexpr std::string_view kEncoderBwdB = "encoder.bwd.b";
inline constexpr std::string_view kDecoderEmbedding = "decoder.embed";
inline constexpr std::string_view kDecoderW = "decoder.W";
inline constexpr std::string_view kDecoderB = "decoder.b";
inline constexpr std::string_view kDecoderReadW = "decoder.read.W";
inline constexpr std::string_view kDecoderReadB = "decoder.read.b";
inline constexpr std::string_view kDecoderSlotW = "decoder.slot.W";
inline constexpr std::string_view kDecoderOutW = "decoder.out.W";
inline constexpr std::string_view kDecoderOutB = "decoder.out.b";
}  // namespace names

struct LstmState {
  Var h;
  Var c;
};

// Standard LSTM cell; w is 4H x (in + H), gate order input, forget, output, cell.
LstmState lstm_step(Graph& g, Var w, Var b, Var x, const LstmState& prev);

// Graph-side utterance encoding.
struct EncodedSequence {
  Var hidden;       // L x 2H, row l = [forward_l ; backward_l]
  Var final_state;  // 2H x 1, [forward_L ; backward_1]
  std::size_t length = 0;
};

// Value-side utterance encoding.
struct EncoderOutput {
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<double> hidden;  // length x dim, row-major
  std::vector<double> final_state;

  std::span<const double> hidden_row(std::size_t l) const {
    return std::span<const double>(hidden).subspan(l * dim, dim);
  }
};

// Bidirectional LSTM over word embeddings. embedding_noise, when non-empty,
// holds L x E values added to the embedded tokens before encoding.
EncodedSequence encode_sequence(Graph& g, ParameterStore& params, std::span<const int> tokens,
                                std::span<const double> embedding_noise = {});
EncoderOutput encode_sequence(ParameterStore& params, std::span<const int> tokens);

// W x + b with parameters "<name>.W" and "<name>.b".
Var affine(Graph& g, ParameterStore& params, std::string_view name, Var x);
std::vector<double> affine(ParameterStore& params, std::string_view name,
                           std::span<const double> x);

struct DecoderState {
  Var h;
  Var c;
};

struct SclstmOutput {
  DecoderState state;
  Var logits;
  Var gate_memory;
};

// Semantically conditioned LSTM step. The reading gate r decays the gate
// memory, d' = r * d * m, where m zeroes the entries listed in reset_gates
// (the slots rendered by input_token). The decayed memory enters the cell
// through tanh(W_slot d'). policy, when valid, is appended to the input.
SclstmOutput sclstm_step(Graph& g, ParameterStore& params, const DecoderState& state,
                         int input_token, Var gate_memory,
                         std::span<const std::size_t> reset_gates, Var policy = {});

}  // namespace semidial::nn
