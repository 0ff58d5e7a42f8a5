#include "semidial/nn/layers.hpp"

#include <string>

#include "semidial/error.hpp"

namespace semidial::nn {

LstmState lstm_step(Graph& g, Var w, Var b, Var x, const LstmState& prev) {
  const std::size_t hidden = g.size(prev.h);
  const Var in[] = {x, prev.h};
  Var gates = g.affine(w, g.concat(in), b);
  if (g.size(gates) != 4 * hidden) {
    throw ContractError("lstm_step: gate size does not match hidden size");
  }
  Var sig = g.sigmoid(g.slice(gates, 0, 3 * hidden));
  Var input = g.slice(sig, 0, hidden);
  Var forget = g.slice(sig, hidden, hidden);
  Var output = g.slice(sig, 2 * hidden, hidden);
  Var cand = g.tanh(g.slice(gates, 3 * hidden, hidden));
  Var c = g.add(g.mul(forget, prev.c), g.mul(input, cand));
  Var h = g.mul(output, g.tanh(c));
  return {h, c};
}

EncodedSequence encode_sequence(Graph& g, ParameterStore& params, std::span<const int> tokens,
                                std::span<const double> embedding_noise) {
  if (tokens.empty()) {
    throw ContractError("encode_sequence: empty input");
  }
  Tensor& table = params.get(names::kWordEmbedding);
  const std::size_t embed = table.cols;
  if (!embedding_noise.empty() && embedding_noise.size() != tokens.size() * embed) {
    throw ContractError("encode_sequence: noise shape does not match L x E");
  }
  Var emb = g.param(table);
  Var fw = g.param(params, names::kEncoderFwdW);
  Var fb = g.param(params, names::kEncoderFwdB);
  Var bw = g.param(params, names::kEncoderBwdW);
  Var bb = g.param(params, names::kEncoderBwdB);
  const std::size_t hidden = g.rows(fw) / 4;

  std::vector<Var> inputs;
  inputs.reserve(tokens.size());
  for (std::size_t l = 0; l < tokens.size(); ++l) {
    const int t = tokens[l];
    if (t < 0 || static_cast<std::size_t>(t) >= table.rows) {
      throw ContractError("encode_sequence: token index " + std::to_string(t) +
                          " outside the vocabulary");
    }
    Var x = g.row(emb, static_cast<std::size_t>(t));
    if (!embedding_noise.empty()) {
      x = g.add(x, g.constant(std::vector<double>(
                       embedding_noise.begin() + static_cast<std::ptrdiff_t>(l * embed),
                       embedding_noise.begin() + static_cast<std::ptrdiff_t>((l + 1) * embed))));
    }
    inputs.push_back(x);
  }

  const std::size_t n = tokens.size();
  std::vector<Var> forward(n), backward(n);
  LstmState s{g.zeros(hidden), g.zeros(hidden)};
  for (std::size_t l = 0; l < n; ++l) {
    s = lstm_step(g, fw, fb, inputs[l], s);
    forward[l] = s.h;
  }
  s = {g.zeros(hidden), g.zeros(hidden)};
  for (std::size_t l = n; l-- > 0;) {
    s = lstm_step(g, bw, bb, inputs[l], s);
    backward[l] = s.h;
  }
  std::vector<Var> rows(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Var pair[] = {forward[l], backward[l]};
    rows[l] = g.concat(pair);
  }
  EncodedSequence out;
  out.hidden = g.stack_rows(rows);
  const Var ends[] = {forward[n - 1], backward[0]};
  out.final_state = g.concat(ends);
  out.length = n;
  return out;
}

EncoderOutput encode_sequence(ParameterStore& params, std::span<const int> tokens) {
  Graph g(false);
  EncodedSequence enc = encode_sequence(g, params, tokens);
  EncoderOutput out;
  out.length = enc.length;
  out.dim = g.cols(enc.hidden);
  out.hidden = g.values(enc.hidden);
  out.final_state = g.values(enc.final_state);
  return out;
}

Var affine(Graph& g, ParameterStore& params, std::string_view name, Var x) {
  const std::string base(name);
  Var w = g.param(params, base + ".W");
  Var b = params.contains(base + ".b") ? g.param(params, base + ".b") : Var{};
  return g.affine(w, x, b);
}

std::vector<double> affine(ParameterStore& params, std::string_view name,
                           std::span<const double> x) {
  Graph g(false);
  Var in = g.constant(std::vector<double>(x.begin(), x.end()));
  return g.values(affine(g, params, name, in));
}

SclstmOutput sclstm_step(Graph& g, ParameterStore& params, const DecoderState& state,
                         int input_token, Var gate_memory,
                         std::span<const std::size_t> reset_gates, Var policy) {
  Tensor& table = params.get(names::kDecoderEmbedding);
  if (input_token < 0 || static_cast<std::size_t>(input_token) >= table.rows) {
    throw ContractError("sclstm_step: token index outside the vocabulary");
  }
  Var x = g.row(g.param(table), static_cast<std::size_t>(input_token));
  if (policy.valid()) {
    const Var parts[] = {x, policy};
    x = g.concat(parts);
  }
  const Var in_parts[] = {x, state.h};
  Var in = g.concat(in_parts);

  const std::size_t slots = g.size(gate_memory);
  Var read = g.sigmoid(g.affine(g.param(params, names::kDecoderReadW), in,
                                g.param(params, names::kDecoderReadB)));
  if (g.size(read) != slots) {
    throw ContractError("sclstm_step: gate memory size does not match the reading gate");
  }
  Var decayed = g.mul(read, gate_memory);
  if (!reset_gates.empty()) {
    std::vector<double> mask(slots, 1.0);
    for (std::size_t r : reset_gates) {
      mask.at(r) = 0.0;
    }
    decayed = g.mul(decayed, g.constant(std::move(mask)));
  }

  Var w = g.param(params, names::kDecoderW);
  Var b = g.param(params, names::kDecoderB);
  const std::size_t hidden = g.size(state.h);
  Var gates = g.affine(w, in, b);
  if (g.size(gates) != 4 * hidden) {
    throw ContractError("sclstm_step: gate size does not match hidden size");
  }
  Var sig = g.sigmoid(g.slice(gates, 0, 3 * hidden));
  Var input = g.slice(sig, 0, hidden);
  Var forget = g.slice(sig, hidden, hidden);
  Var output = g.slice(sig, 2 * hidden, hidden);
  Var cand = g.tanh(g.slice(gates, 3 * hidden, hidden));
  Var semantic = g.tanh(g.affine(g.param(params, names::kDecoderSlotW), decayed, Var{}));
  Var c = g.add(g.add(g.mul(forget, state.c), g.mul(input, cand)), semantic);
  Var h = g.mul(output, g.tanh(c));
  Var logits = g.affine(g.param(params, names::kDecoderOutW), h,
                        g.param(params, names::kDecoderOutB));
  return {{h, c}, logits, decayed};
}

}  // namespace semidial::nn
