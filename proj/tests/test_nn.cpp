#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "semidial/error.hpp"
#include "semidial/nn/grad_check.hpp"
#include "semidial/nn/layers.hpp"
#include "semidial/nn/optim.hpp"
#include "support.hpp"

using namespace semidial;
using namespace semidial::nn;

namespace {

// Reduces any node to a scalar with fixed pseudo-random weights so that every
// output entry matters to the gradient.
Var reduce(Graph& g, Var v) {
  std::vector<double> w(g.size(v));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.7 * static_cast<double>(i) + 0.3);
  return g.dot(g.constant(g.rows(v), g.cols(v), w), v);
}

ParameterStore op_params() {
  ParameterStore p(42);
  p.add("A", 3, 4, 1.0);
  p.add("B", 4, 2, 1.0);
  p.add("C", 5, 4, 1.0);
  p.add("u", 4, 1, 1.0);
  p.add("v", 4, 1, 1.0);
  p.add("w", 3, 1, 1.0);
  return p;
}

void expect_grad_ok(const LossBuilder& f, ParameterStore& p) {
  const auto r = grad_check(f, p, 1e-6);
  INFO("worst " << r.worst_parameter << "[" << r.worst_index << "] analytic " << r.worst_analytic
                << " numeric " << r.worst_numeric);
  CHECK(r.passed);
  CHECK(r.entries_checked == p.parameter_count());
}

}  // namespace

TEST_CASE("grad_check on x^2 at 3") {
  ParameterStore p;
  p.add_zeros("x", 1, 1).value[0] = 3.0;
  const auto r = grad_check([&](Graph& g) { Var x = g.param(p, "x"); return g.dot(x, x); }, p, 1e-8);
  CHECK(r.passed);
  CHECK(r.worst_analytic == doctest::Approx(6.0));
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("grad_check flags a wrong gradient and a non-finite loss") {
  ParameterStore p;
  p.add_zeros("x", 1, 1).value[0] = 2.0;
  // stop_gradient hides the dependency, so the analytic gradient is 0.
  const auto r = grad_check([&](Graph& g) {
    Var x = g.param(p, "x");
    return g.dot(g.stop_gradient(x), x);
  }, p, 1e-4);
  CHECK_FALSE(r.passed);
  p.get("x").value[0] = 0.0;
  CHECK_THROWS_AS(grad_check([&](Graph& g) { return g.sum(g.scale(g.param(p, "x"), std::numeric_limits<double>::infinity())); }, p, 1e-4)
                      .passed, CheckError);
}

TEST_CASE("every graph operation passes the gradient check") {
  ParameterStore p = op_params();
  using Op = std::function<Var(Graph&)>;
  const std::vector<std::pair<const char*, Op>> ops = {
      {"matmul", [&](Graph& g) { return g.matmul(g.param(p, "A"), g.param(p, "B")); }},
      {"matmul_nt", [&](Graph& g) { return g.matmul_nt(g.param(p, "C"), g.param(p, "A")); }},
      {"affine", [&](Graph& g) { return g.affine(g.param(p, "A"), g.param(p, "u"), g.param(p, "w")); }},
      {"affine_nobias", [&](Graph& g) { return g.affine(g.param(p, "A"), g.param(p, "u"), Var{}); }},
      {"add", [&](Graph& g) { return g.add(g.param(p, "u"), g.param(p, "v")); }},
      {"sub", [&](Graph& g) { return g.sub(g.param(p, "u"), g.param(p, "v")); }},
      {"mul", [&](Graph& g) { return g.mul(g.param(p, "u"), g.param(p, "v")); }},
      {"scale", [&](Graph& g) { return g.scale(g.param(p, "u"), -2.5); }},
      {"sigmoid", [&](Graph& g) { return g.sigmoid(g.param(p, "A")); }},
      {"tanh", [&](Graph& g) { return g.tanh(g.param(p, "A")); }},
      {"softmax", [&](Graph& g) { return g.softmax(g.param(p, "u")); }},
      {"softmax_rows", [&](Graph& g) { return g.softmax_rows(g.param(p, "C")); }},
      {"concat", [&](Graph& g) {
         const Var parts[] = {g.param(p, "u"), g.param(p, "w")};
         return g.concat(parts);
       }},
      {"stack_rows", [&](Graph& g) {
         const Var parts[] = {g.param(p, "u"), g.param(p, "v")};
         return g.stack_rows(parts);
       }},
      {"slice", [&](Graph& g) { return g.slice(g.param(p, "u"), 1, 2); }},
      {"row", [&](Graph& g) { return g.row(g.param(p, "C"), 3); }},
      {"rowdot", [&](Graph& g) { return g.rowdot(g.param(p, "C"), g.param(p, "C")); }},
      {"dot", [&](Graph& g) { return g.dot(g.param(p, "u"), g.param(p, "v")); }},
      {"sum", [&](Graph& g) { return g.sum(g.param(p, "A")); }},
      {"add_n", [&](Graph& g) {
         const Var s[] = {g.dot(g.param(p, "u"), g.param(p, "v")), g.sum(g.param(p, "w"))};
         return g.add_n(s);
       }},
      {"neg_log", [&](Graph& g) { return g.neg_log(g.softmax(g.param(p, "u")), 2); }},
      {"bce1", [&](Graph& g) { return g.binary_cross_entropy(g.sigmoid(g.param(p, "u")), 1, 1.0); }},
      {"bce0", [&](Graph& g) { return g.binary_cross_entropy(g.sigmoid(g.param(p, "u")), 3, 0.0); }},
      {"cross_entropy_logits", [&](Graph& g) { return g.cross_entropy_logits(g.param(p, "u"), 1); }},
      {"squared_distance", [&](Graph& g) { return g.squared_distance(g.param(p, "u"), g.param(p, "v")); }},
  };
  for (const auto& [name, op] : ops) {
    CAPTURE(name);
    expect_grad_ok([&](Graph& g) { return reduce(g, op(g)); }, p);
  }
}

TEST_CASE("stop_gradient passes values and blocks gradients") {
  ParameterStore p = op_params();
  Graph g;
  Var u = g.param(p, "u");
  Var s = g.stop_gradient(u);
  CHECK(g.values(s) == g.values(u));
  CHECK_FALSE(g.requires_grad(s));
  g.backward(g.dot(s, g.constant(std::vector<double>(4, 1.0))));
  for (double x : p.get("u").grad) CHECK(x == 0.0);
}

TEST_CASE("softmax sums to one and sigmoid stays inside (0, 1)") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 20.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(7);
    for (double& v : x) v = n(rng);
    Graph g(false);
    double total = 0.0;
    for (double v : g.values(g.softmax(g.constant(x)))) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
    for (double v : g.values(g.sigmoid(g.constant(std::vector<double>{n(rng) / 4.0})))) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("affine examples") {
  ParameterStore p;
  Tensor& w = p.add_zeros("l.W", 1, 2);
  w.value = {1.0, 2.0};
  p.add_zeros("l.b", 1, 1).value = {0.5};
  CHECK(affine(p, "l", std::vector<double>{1.0, 1.0}) == std::vector<double>{3.5});

  ParameterStore id;
  Tensor& iw = id.add_zeros("i.W", 3, 3);
  for (int k = 0; k < 3; ++k) iw.at(k, k) = 1.0;
  id.add_zeros("i.b", 3, 1);
  const std::vector<double> x = {0.25, -1.0, 4.0};
  CHECK(affine(id, "i", x) == x);

  ParameterStore c;
  c.add_zeros("c.W", 2, 3);
  c.add_zeros("c.b", 2, 1).value = {7.0, -3.0};
  CHECK(affine(c, "c", x) == std::vector<double>{7.0, -3.0});
  CHECK_THROWS_AS(affine(c, "c", std::vector<double>{1.0}), ContractError);
}

TEST_CASE("parameter store initialisation is seeded and position-stable") {
  ParameterStore a(5), b(5), c(6);
  a.add("x", 3, 3, 0.08);
  b.add("x", 3, 3, 0.08);
  c.add("x", 3, 3, 0.08);
  CHECK(a.get("x").value == b.get("x").value);
  CHECK(a.get("x").value != c.get("x").value);
  for (double v : a.get("x").value) CHECK(std::abs(v) <= 0.08);
  a.add("y", 2, 2, 0.08);
  ParameterStore d(5);
  d.add("x", 3, 3, 0.08);
  CHECK(d.get("x").value == a.get("x").value);
  CHECK_THROWS(a.add("x", 1, 1, 0.1));
  CHECK(ParameterStore::from_json(a.to_json()).to_json() == a.to_json());
}

TEST_CASE("gradient clipping and SGD") {
  ParameterStore p;
  Tensor& t = p.add_zeros("t", 2, 1);
  t.grad = {3.0, 4.0};
  CHECK(p.grad_norm() == doctest::Approx(5.0));
  p.clip_grad_norm(1.0);
  CHECK(p.grad_norm() == doctest::Approx(1.0));
  p.sgd_step(0.5);
  CHECK(t.value[0] == doctest::Approx(-0.3));
  CHECK(t.value[1] == doctest::Approx(-0.4));
  p.zero_grad();
  CHECK(p.grad_norm() == 0.0);
}

TEST_CASE("Adam first step moves each entry by the learning rate") {
  ParameterStore p;
  Tensor& t = p.add_zeros("t", 3, 1);
  t.grad = {2.0, -0.001, 0.0};
  Adam adam(0.1);
  adam.step(p);
  // With bias correction the first update is lr * g / (|g| + eps).
  CHECK(t.value[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(t.value[1] == doctest::Approx(0.1).epsilon(1e-4));
  CHECK(t.value[2] == 0.0);
  CHECK(adam.steps() == 1);
}

namespace {

ParameterStore encoder_params(std::uint64_t seed, double range, std::size_t vocab = 6) {
  ParameterStore p(seed);
  p.add(std::string(names::kWordEmbedding), vocab, 3, range);
  p.add(std::string(names::kEncoderFwdW), 8, 5, range);
  p.add(std::string(names::kEncoderFwdB), 8, 1, range);
  p.add(std::string(names::kEncoderBwdW), 8, 5, range);
  p.add(std::string(names::kEncoderBwdB), 8, 1, range);
  return p;
}

}  // namespace

TEST_CASE("encode_sequence shapes and final state") {
  ParameterStore p = encoder_params(1, 0.5);
  const std::vector<int> one = {3};
  const auto e1 = encode_sequence(p, one);
  CHECK(e1.length == 1);
  CHECK(e1.dim == 4);
  CHECK(e1.hidden.size() == 4);
  CHECK(e1.final_state.size() == 4);

  const std::vector<int> seq = {1, 4, 2, 5};
  const auto e = encode_sequence(p, seq);
  CHECK(e.length == 4);
  // [forward_L ; backward_1]
  CHECK(e.final_state[0] == e.hidden_row(3)[0]);
  CHECK(e.final_state[1] == e.hidden_row(3)[1]);
  CHECK(e.final_state[2] == e.hidden_row(0)[2]);
  CHECK(e.final_state[3] == e.hidden_row(0)[3]);
  CHECK(encode_sequence(p, seq).hidden == e.hidden);

  CHECK_THROWS_AS(encode_sequence(p, std::vector<int>{}), ContractError);
  CHECK_THROWS_AS(encode_sequence(p, std::vector<int>{9}), ContractError);
}

TEST_CASE("encode_sequence is bidirectional") {
  ParameterStore p = encoder_params(2, 0.5);
  const std::vector<int> a = {1, 2, 3, 4};
  const std::vector<int> b = {1, 3, 2, 4};
  const auto ea = encode_sequence(p, a);
  const auto eb = encode_sequence(p, b);
  CHECK(ea.hidden != eb.hidden);
  // The first position's backward half sees the later tokens.
  const std::vector<int> c = {1, 2, 3, 5};
  const auto ec = encode_sequence(p, c);
  CHECK(ea.hidden_row(0)[2] != ec.hidden_row(0)[2]);
  CHECK(ea.hidden_row(0)[0] == ec.hidden_row(0)[0]);
}

TEST_CASE("zero weights give the zero-input fixed point") {
  ParameterStore p = encoder_params(3, 0.0);
  const std::vector<int> seq = {1, 2, 3};
  const auto e = encode_sequence(p, seq);
  for (double h : e.hidden) CHECK(h == 0.0);
}

TEST_CASE("encoder gradients pass the check, with and without noise") {
  ParameterStore p = encoder_params(4, 0.4);
  const std::vector<int> seq = {1, 4, 2};
  std::vector<double> noise(9);
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = 0.1 * std::cos(static_cast<double>(i));
  expect_grad_ok([&](Graph& g) {
    auto e = encode_sequence(g, p, seq);
    const Var parts[] = {reduce(g, e.hidden), reduce(g, e.final_state)};
    return g.add_n(parts);
  }, p);
  expect_grad_ok([&](Graph& g) { return reduce(g, encode_sequence(g, p, seq, noise).hidden); }, p);
}

namespace {

ParameterStore decoder_params(std::uint64_t seed, std::size_t slots) {
  ParameterStore p(seed);
  const std::size_t V = 6, E = 3, H = 4;
  p.add(std::string(names::kDecoderEmbedding), V, E, 0.5);
  p.add(std::string(names::kDecoderW), 4 * H, E + H, 0.5);
  p.add(std::string(names::kDecoderB), 4 * H, 1, 0.5);
  p.add(std::string(names::kDecoderReadW), slots, E + H, 0.5);
  p.add(std::string(names::kDecoderReadB), slots, 1, 0.5);
  p.add(std::string(names::kDecoderSlotW), H, slots, 0.5);
  p.add(std::string(names::kDecoderOutW), V, H, 0.5);
  p.add(std::string(names::kDecoderOutB), V, 1, 0.5);
  return p;
}

}  // namespace

TEST_CASE("sclstm_step with empty gate memory is a plain LSTM step") {
  ParameterStore p = decoder_params(5, 3);
  Graph g(false);
  DecoderState s{g.constant(std::vector<double>{0.1, -0.2, 0.3, 0.0}),
                 g.constant(std::vector<double>{0.05, 0.1, -0.1, 0.2})};
  const auto out = sclstm_step(g, p, s, 2, g.zeros(3), {});
  Var x = g.row(g.param(p, names::kDecoderEmbedding), 2);
  const auto plain = lstm_step(g, g.param(p, names::kDecoderW), g.param(p, names::kDecoderB), x, {s.h, s.c});
  CHECK(g.values(out.state.h) == g.values(plain.h));
  CHECK(g.values(out.state.c) == g.values(plain.c));
  for (double d : g.values(out.gate_memory)) CHECK(d == 0.0);
}

TEST_CASE("gate memory never increases and resets on emitted slots") {
  ParameterStore p = decoder_params(6, 3);
  Graph g(false);
  DecoderState s{g.zeros(4), g.zeros(4)};
  Var d = g.constant(std::vector<double>{0.9, 0.5, 1.0});
  std::vector<double> prev = g.values(d);
  for (int tok : {1, 3, 4, 2, 5}) {
    const std::size_t reset[] = {1};
    const auto out = sclstm_step(g, p, s, tok, d, tok == 4 ? std::span<const std::size_t>(reset)
                                                          : std::span<const std::size_t>());
    const auto cur = g.values(out.gate_memory);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      CHECK(cur[k] <= prev[k]);
      CHECK(cur[k] >= 0.0);
    }
    if (tok == 4) CHECK(cur[1] == 0.0);
    prev = cur;
    s = out.state;
    d = out.gate_memory;
  }
}

TEST_CASE("sclstm_step is deterministic and differentiable") {
  ParameterStore p = decoder_params(7, 2);
  auto run = [&] {
    Graph g(false);
    const auto out = sclstm_step(g, p, {g.zeros(4), g.zeros(4)}, 3,
                                 g.constant(std::vector<double>{0.7, 0.2}), {});
    return g.values(out.logits);
  };
  CHECK(run() == run());
  expect_grad_ok([&](Graph& g) {
    DecoderState s{g.zeros(4), g.zeros(4)};
    Var d = g.constant(std::vector<double>{0.7, 0.2});
    std::vector<Var> terms;
    for (int tok : {1, 4, 2}) {
      const std::size_t reset[] = {0};
      auto out = sclstm_step(g, p, s, tok, d, tok == 4 ? std::span<const std::size_t>(reset)
                                                       : std::span<const std::size_t>());
      terms.push_back(g.cross_entropy_logits(out.logits, static_cast<std::size_t>(tok)));
      terms.push_back(reduce(g, out.gate_memory));
      s = out.state;
      d = out.gate_memory;
    }
    return g.add_n(terms);
  }, p);
  Graph g;
  CHECK_THROWS_AS(sclstm_step(g, p, {g.zeros(4), g.zeros(4)}, 99, g.zeros(2), {}), ContractError);
  CHECK_THROWS_AS(sclstm_step(g, p, {g.zeros(4), g.zeros(4)}, 1, g.zeros(3), {}), ContractError);
}
