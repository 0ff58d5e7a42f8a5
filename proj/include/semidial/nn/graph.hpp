#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "semidial/nn/tensor.hpp"

namespace semidial::nn {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbFloor = 1e-12;

// A tape of row-major matrix operations with reverse-mode differentiation.
// Parameter leaves read and accumulate straight into their Tensor, so one
// backward() adds this graph's gradient to the ParameterStore.
class Graph {
 public:
  Graph() = default;
  // With track_gradients false parameters enter as plain values and no
  // backward closures are recorded.
  explicit Graph(bool track_gradients) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  Var constant(std::vector<double> column);
  Var zeros(std::size_t rows, std::size_t cols = 1);
  Var param(Tensor& tensor);
  Var param(ParameterStore& store, std::string_view name);

  Var matmul(Var a, Var b);     // a b
  Var matmul_nt(Var a, Var b);  // a b^T
  Var affine(Var w, Var x, Var b);  // w x + b; b may be an invalid Var
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double factor);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);       // over every element
  Var softmax_rows(Var a);  // independently per row
  Var concat(std::span<const Var> parts);      // flattened into a column
  Var stack_rows(std::span<const Var> parts);  // each part becomes one row
  Var slice(Var a, std::size_t offset, std::size_t length);
  Var row(Var a, std::size_t r);   // row r as a column vector
  Var rowdot(Var a, Var b);        // per-row inner products, m x 1
  Var dot(Var a, Var b);
  Var sum(Var a);
  Var add_n(std::span<const Var> scalars);
  Var neg_log(Var probs, std::size_t index);
  Var binary_cross_entropy(Var probs, std::size_t index, double target);
  Var cross_entropy_logits(Var logits, std::size_t target);
  Var squared_distance(Var a, Var b);
  Var stop_gradient(Var a);

  std::span<const double> value(Var v) const;
  std::vector<double> values(Var v) const;
  double scalar(Var v) const;
  std::size_t rows(Var v) const;
  std::size_t cols(Var v) const;
  std::size_t size(Var v) const;
  bool requires_grad(Var v) const;

  // Gradient of the last backward() pass; empty for constant nodes.
  std::span<const double> grad(Var v) const;
  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(std::size_t rows, std::size_t cols, std::vector<double> value, bool requires_grad);
  Node& node(Var v);
  const Node& node(Var v) const;
  std::span<double> val(int id);
  std::span<double> grd(int id);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> bound_;
  bool track_ = true;
};

}  // namespace semidial::nn
