#include "semidial/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "semidial/error.hpp"

namespace semidial::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using MapCM = Eigen::Map<const RowMat>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using MapCV = Eigen::Map<const Eigen::VectorXd>;

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void softmax_inplace(std::span<const double> in, std::span<double> out) {
  const double mx = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - mx);
    total += out[i];
  }
  for (auto& v : out) {
    v /= total;
  }
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw ContractError(std::string("graph op ") + op + ": " + detail);
}

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Var Graph::push(std::size_t rows, std::size_t cols, std::vector<double> value,
                bool requires_grad) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Graph::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractError("graph: invalid variable handle");
  }
}

Graph::Node& Graph::node(Var v) {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)];
}

std::span<double> Graph::val(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param ? std::span<double>(n.param->value) : std::span<double>(n.value);
}

std::span<double> Graph::grd(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param ? std::span<double>(n.param->grad) : std::span<double>(n.grad);
}

std::span<const double> Graph::value(Var v) const {
  const Node& n = node(v);
  return n.param ? std::span<const double>(n.param->value) : std::span<const double>(n.value);
}

std::vector<double> Graph::values(Var v) const {
  auto s = value(v);
  return {s.begin(), s.end()};
}

double Graph::scalar(Var v) const {
  const Node& n = node(v);
  if (n.rows * n.cols != 1) {
    throw ContractError("graph: scalar() on a " + dims(n.rows, n.cols) + " node");
  }
  return value(v)[0];
}

std::size_t Graph::rows(Var v) const { return node(v).rows; }
std::size_t Graph::cols(Var v) const { return node(v).cols; }
std::size_t Graph::size(Var v) const { return node(v).rows * node(v).cols; }
bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<const double> Graph::grad(Var v) const {
  const Node& n = node(v);
  return n.param ? std::span<const double>(n.param->grad) : std::span<const double>(n.grad);
}

Var Graph::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    shape_error("constant", "value count does not match " + dims(rows, cols));
  }
  return push(rows, cols, std::move(values), false);
}

Var Graph::constant(std::vector<double> column) {
  const std::size_t n = column.size();
  return push(n, 1, std::move(column), false);
}

Var Graph::zeros(std::size_t rows, std::size_t cols) {
  return push(rows, cols, std::vector<double>(rows * cols, 0.0), false);
}

Var Graph::param(Tensor& tensor) {
  auto it = bound_.find(&tensor);
  if (it != bound_.end()) {
    return Var{it->second};
  }
  if (track_) {
    tensor.ensure_grad();
  }
  Var v = push(tensor.rows, tensor.cols, {}, track_);
  nodes_.back().param = &tensor;
  bound_.emplace(&tensor, v.id);
  return v;
}

Var Graph::param(ParameterStore& store, std::string_view name) { return param(store.get(name)); }

Var Graph::matmul(Var a, Var b) {
  const std::size_t m = rows(a), k = cols(a), n = cols(b);
  if (rows(b) != k) {
    shape_error("matmul", dims(m, k) + " times " + dims(rows(b), n));
  }
  std::vector<double> out(m * n);
  MapM(out.data(), static_cast<long>(m), static_cast<long>(n)).noalias() =
      MapCM(value(a).data(), static_cast<long>(m), static_cast<long>(k)) *
      MapCM(value(b).data(), static_cast<long>(k), static_cast<long>(n));
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(m, n, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y, m, k, n] {
      MapCM dy(grd(y.id).data(), static_cast<long>(m), static_cast<long>(n));
      if (nodes_[a.id].requires_grad) {
        MapM(grd(a.id).data(), static_cast<long>(m), static_cast<long>(k)).noalias() +=
            dy * MapCM(val(b.id).data(), static_cast<long>(k), static_cast<long>(n)).transpose();
      }
      if (nodes_[b.id].requires_grad) {
        MapM(grd(b.id).data(), static_cast<long>(k), static_cast<long>(n)).noalias() +=
            MapCM(val(a.id).data(), static_cast<long>(m), static_cast<long>(k)).transpose() * dy;
      }
    };
  }
  return y;
}

Var Graph::matmul_nt(Var a, Var b) {
  const std::size_t m = rows(a), k = cols(a), n = rows(b);
  if (cols(b) != k) {
    shape_error("matmul_nt", dims(m, k) + " times transpose of " + dims(n, cols(b)));
  }
  std::vector<double> out(m * n);
  MapM(out.data(), static_cast<long>(m), static_cast<long>(n)).noalias() =
      MapCM(value(a).data(), static_cast<long>(m), static_cast<long>(k)) *
      MapCM(value(b).data(), static_cast<long>(n), static_cast<long>(k)).transpose();
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(m, n, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y, m, k, n] {
      MapCM dy(grd(y.id).data(), static_cast<long>(m), static_cast<long>(n));
      if (nodes_[a.id].requires_grad) {
        MapM(grd(a.id).data(), static_cast<long>(m), static_cast<long>(k)).noalias() +=
            dy * MapCM(val(b.id).data(), static_cast<long>(n), static_cast<long>(k));
      }
      if (nodes_[b.id].requires_grad) {
        MapM(grd(b.id).data(), static_cast<long>(n), static_cast<long>(k)).noalias() +=
            dy.transpose() * MapCM(val(a.id).data(), static_cast<long>(m), static_cast<long>(k));
      }
    };
  }
  return y;
}

Var Graph::affine(Var w, Var x, Var b) {
  const std::size_t m = rows(w), n = cols(w);
  if (size(x) != n) {
    shape_error("affine", "weight " + dims(m, n) + " with input of size " +
                              std::to_string(size(x)));
  }
  if (b.valid() && size(b) != m) {
    shape_error("affine", "bias of size " + std::to_string(size(b)) + " for output " +
                              std::to_string(m));
  }
  std::vector<double> out(m);
  MapV yv(out.data(), static_cast<long>(m));
  yv.noalias() = MapCM(value(w).data(), static_cast<long>(m), static_cast<long>(n)) *
                 MapCV(value(x).data(), static_cast<long>(n));
  if (b.valid()) {
    yv += MapCV(value(b).data(), static_cast<long>(m));
  }
  const bool rg = requires_grad(w) || requires_grad(x) || (b.valid() && requires_grad(b));
  Var y = push(m, 1, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, w, x, b, y, m, n] {
      MapCV dy(grd(y.id).data(), static_cast<long>(m));
      if (nodes_[w.id].requires_grad) {
        MapM(grd(w.id).data(), static_cast<long>(m), static_cast<long>(n)).noalias() +=
            dy * MapCV(val(x.id).data(), static_cast<long>(n)).transpose();
      }
      if (nodes_[x.id].requires_grad) {
        MapV(grd(x.id).data(), static_cast<long>(n)).noalias() +=
            MapCM(val(w.id).data(), static_cast<long>(m), static_cast<long>(n)).transpose() * dy;
      }
      if (b.valid() && nodes_[b.id].requires_grad) {
        MapV(grd(b.id).data(), static_cast<long>(m)) += dy;
      }
    };
  }
  return y;
}

Var Graph::add(Var a, Var b) {
  if (size(a) != size(b)) {
    shape_error("add", dims(rows(a), cols(a)) + " + " + dims(rows(b), cols(b)));
  }
  auto av = value(a), bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y] {
      auto dy = grd(y.id);
      if (nodes_[a.id].requires_grad) {
        auto da = grd(a.id);
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
      }
      if (nodes_[b.id].requires_grad) {
        auto db = grd(b.id);
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
      }
    };
  }
  return y;
}

Var Graph::sub(Var a, Var b) {
  if (size(a) != size(b)) {
    shape_error("sub", dims(rows(a), cols(a)) + " - " + dims(rows(b), cols(b)));
  }
  auto av = value(a), bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y] {
      auto dy = grd(y.id);
      if (nodes_[a.id].requires_grad) {
        auto da = grd(a.id);
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
      }
      if (nodes_[b.id].requires_grad) {
        auto db = grd(b.id);
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
      }
    };
  }
  return y;
}

Var Graph::mul(Var a, Var b) {
  if (size(a) != size(b)) {
    shape_error("mul", dims(rows(a), cols(a)) + " * " + dims(rows(b), cols(b)));
  }
  auto av = value(a), bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y] {
      auto dy = grd(y.id);
      auto av = val(a.id), bv = val(b.id);
      if (nodes_[a.id].requires_grad) {
        auto da = grd(a.id);
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
      }
      if (nodes_[b.id].requires_grad) {
        auto db = grd(b.id);
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
      }
    };
  }
  return y;
}

Var Graph::scale(Var a, double factor) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  const bool rg = requires_grad(a);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y, factor] {
      auto dy = grd(y.id);
      auto da = grd(a.id);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * factor;
    };
  }
  return y;
}

Var Graph::sigmoid(Var a) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(av[i]);
  const bool rg = requires_grad(a);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y] {
      auto dy = grd(y.id);
      auto yv = val(y.id);
      auto da = grd(a.id);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * yv[i] * (1.0 - yv[i]);
    };
  }
  return y;
}

Var Graph::tanh(Var a) {
  auto av = value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  const bool rg = requires_grad(a);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y] {
      auto dy = grd(y.id);
      auto yv = val(y.id);
      auto da = grd(a.id);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - yv[i] * yv[i]);
    };
  }
  return y;
}

Var Graph::softmax(Var a) {
  if (size(a) == 0) {
    shape_error("softmax", "empty input");
  }
  std::vector<double> out(size(a));
  softmax_inplace(value(a), out);
  const bool rg = requires_grad(a);
  Var y = push(rows(a), cols(a), std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y] {
      auto dy = grd(y.id);
      auto yv = val(y.id);
      auto da = grd(a.id);
      double inner = 0.0;
      for (std::size_t i = 0; i < dy.size(); ++i) inner += dy[i] * yv[i];
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += yv[i] * (dy[i] - inner);
    };
  }
  return y;
}

Var Graph::softmax_rows(Var a) {
  const std::size_t m = rows(a), n = cols(a);
  if (n == 0) {
    shape_error("softmax_rows", "rows are empty");
  }
  std::vector<double> out(m * n);
  auto av = value(a);
  for (std::size_t r = 0; r < m; ++r) {
    softmax_inplace(av.subspan(r * n, n), std::span<double>(out).subspan(r * n, n));
  }
  const bool rg = requires_grad(a);
  Var y = push(m, n, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y, m, n] {
      auto dy = grd(y.id);
      auto yv = val(y.id);
      auto da = grd(a.id);
      for (std::size_t r = 0; r < m; ++r) {
        double inner = 0.0;
        for (std::size_t c = 0; c < n; ++c) inner += dy[r * n + c] * yv[r * n + c];
        for (std::size_t c = 0; c < n; ++c) {
          da[r * n + c] += yv[r * n + c] * (dy[r * n + c] - inner);
        }
      }
    };
  }
  return y;
}

Var Graph::concat(std::span<const Var> parts) {
  std::vector<double> out;
  bool rg = false;
  for (Var p : parts) {
    auto pv = value(p);
    out.insert(out.end(), pv.begin(), pv.end());
    rg = rg || requires_grad(p);
  }
  const std::size_t total = out.size();
  Var y = push(total, 1, std::move(out), rg);
  if (rg) {
    std::vector<Var> inputs(parts.begin(), parts.end());
    nodes_.back().backward = [this, inputs = std::move(inputs), y] {
      auto dy = grd(y.id);
      std::size_t off = 0;
      for (Var p : inputs) {
        const std::size_t n = nodes_[p.id].rows * nodes_[p.id].cols;
        if (nodes_[p.id].requires_grad) {
          auto dp = grd(p.id);
          for (std::size_t i = 0; i < n; ++i) dp[i] += dy[off + i];
        }
        off += n;
      }
    };
  }
  return y;
}

Var Graph::stack_rows(std::span<const Var> parts) {
  if (parts.empty()) {
    shape_error("stack_rows", "no rows");
  }
  const std::size_t n = size(parts.front());
  for (Var p : parts) {
    if (size(p) != n) {
      shape_error("stack_rows", "rows of unequal length");
    }
  }
  Var y = concat(parts);
  Node& out = nodes_.back();
  out.rows = parts.size();
  out.cols = n;
  return y;
}

Var Graph::slice(Var a, std::size_t offset, std::size_t length) {
  if (offset + length > size(a)) {
    shape_error("slice", "range [" + std::to_string(offset) + ", " +
                             std::to_string(offset + length) + ") exceeds " +
                             std::to_string(size(a)));
  }
  auto av = value(a);
  std::vector<double> out(av.begin() + static_cast<std::ptrdiff_t>(offset),
                          av.begin() + static_cast<std::ptrdiff_t>(offset + length));
  const bool rg = requires_grad(a);
  Var y = push(length, 1, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, y, offset, length] {
      auto dy = grd(y.id);
      auto da = grd(a.id);
      for (std::size_t i = 0; i < length; ++i) da[offset + i] += dy[i];
    };
  }
  return y;
}

Var Graph::row(Var a, std::size_t r) {
  if (r >= rows(a)) {
    shape_error("row", "row " + std::to_string(r) + " of " + dims(rows(a), cols(a)));
  }
  const std::size_t n = cols(a);
  return slice(a, r * n, n);
}

Var Graph::rowdot(Var a, Var b) {
  const std::size_t m = rows(a), n = cols(a);
  if (rows(b) != m || cols(b) != n) {
    shape_error("rowdot", dims(m, n) + " vs " + dims(rows(b), cols(b)));
  }
  auto av = value(a), bv = value(b);
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += av[r * n + c] * bv[r * n + c];
    out[r] = s;
  }
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(m, 1, std::move(out), rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y, m, n] {
      auto dy = grd(y.id);
      auto av = val(a.id), bv = val(b.id);
      if (nodes_[a.id].requires_grad) {
        auto da = grd(a.id);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) da[r * n + c] += dy[r] * bv[r * n + c];
      }
      if (nodes_[b.id].requires_grad) {
        auto db = grd(b.id);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) db[r * n + c] += dy[r] * av[r * n + c];
      }
    };
  }
  return y;
}

Var Graph::dot(Var a, Var b) {
  if (size(a) != size(b)) {
    shape_error("dot", "sizes " + std::to_string(size(a)) + " and " + std::to_string(size(b)));
  }
  auto av = value(a), bv = value(b);
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(1, 1, {s}, rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y] {
      const double dy = grd(y.id)[0];
      auto av = val(a.id), bv = val(b.id);
      if (nodes_[a.id].requires_grad) {
        auto da = grd(a.id);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy * bv[i];
      }
      if (nodes_[b.id].requires_grad) {
        auto db = grd(b.id);
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy * av[i];
      }
    };
  }
  return y;
}

Var Graph::sum(Var a) {
  double s = 0.0;
  for (double v : value(a)) s += v;
  const bool rg = requires_grad(a);
  Var y = push(1, 1, {s}, rg);
  if (rg) {
    nodes_.back().backward = [this, a, y] {
      const double dy = grd(y.id)[0];
      for (double& g : grd(a.id)) g += dy;
    };
  }
  return y;
}

Var Graph::add_n(std::span<const Var> scalars) {
  double s = 0.0;
  bool rg = false;
  for (Var v : scalars) {
    if (size(v) != 1) {
      shape_error("add_n", "non-scalar term");
    }
    s += value(v)[0];
    rg = rg || requires_grad(v);
  }
  Var y = push(1, 1, {s}, rg);
  if (rg) {
    std::vector<Var> inputs(scalars.begin(), scalars.end());
    nodes_.back().backward = [this, inputs = std::move(inputs), y] {
      const double dy = grd(y.id)[0];
      for (Var v : inputs) {
        if (nodes_[v.id].requires_grad) grd(v.id)[0] += dy;
      }
    };
  }
  return y;
}

Var Graph::neg_log(Var probs, std::size_t index) {
  if (index >= size(probs)) {
    shape_error("neg_log", "index out of range");
  }
  const double p = value(probs)[index];
  const bool rg = requires_grad(probs);
  Var y = push(1, 1, {-std::log(std::max(p, kProbFloor))}, rg);
  if (rg) {
    nodes_.back().backward = [this, probs, y, index] {
      const double p = val(probs.id)[index];
      if (p > kProbFloor) {
        grd(probs.id)[index] -= grd(y.id)[0] / p;
      }
    };
  }
  return y;
}

Var Graph::binary_cross_entropy(Var probs, std::size_t index, double target) {
  if (index >= size(probs)) {
    shape_error("binary_cross_entropy", "index out of range");
  }
  const double p = value(probs)[index];
  const double loss = -(target * std::log(std::max(p, kProbFloor)) +
                        (1.0 - target) * std::log(std::max(1.0 - p, kProbFloor)));
  const bool rg = requires_grad(probs);
  Var y = push(1, 1, {loss}, rg);
  if (rg) {
    nodes_.back().backward = [this, probs, y, index, target] {
      const double p = val(probs.id)[index];
      const double dy = grd(y.id)[0];
      double d = 0.0;
      if (p > kProbFloor) d -= target / p;
      if (1.0 - p > kProbFloor) d += (1.0 - target) / (1.0 - p);
      grd(probs.id)[index] += dy * d;
    };
  }
  return y;
}

Var Graph::cross_entropy_logits(Var logits, std::size_t target) {
  if (target >= size(logits)) {
    shape_error("cross_entropy_logits", "target out of range");
  }
  auto z = value(logits);
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double loss = std::log(total) + mx - z[target];
  const bool rg = requires_grad(logits);
  Var y = push(1, 1, {loss}, rg);
  if (rg) {
    nodes_.back().backward = [this, logits, y, target] {
      auto z = val(logits.id);
      auto dz = grd(logits.id);
      const double dy = grd(y.id)[0];
      const double mx = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (double v : z) total += std::exp(v - mx);
      for (std::size_t i = 0; i < z.size(); ++i) {
        dz[i] += dy * std::exp(z[i] - mx) / total;
      }
      dz[target] -= dy;
    };
  }
  return y;
}

Var Graph::squared_distance(Var a, Var b) {
  if (size(a) != size(b)) {
    shape_error("squared_distance", "sizes differ");
  }
  auto av = value(a), bv = value(b);
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const bool rg = requires_grad(a) || requires_grad(b);
  Var y = push(1, 1, {s}, rg);
  if (rg) {
    nodes_.back().backward = [this, a, b, y] {
      const double dy = grd(y.id)[0];
      auto av = val(a.id), bv = val(b.id);
      const bool ga = nodes_[a.id].requires_grad, gb = nodes_[b.id].requires_grad;
      for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = 2.0 * (av[i] - bv[i]) * dy;
        if (ga) grd(a.id)[i] += d;
        if (gb) grd(b.id)[i] -= d;
      }
    };
  }
  return y;
}

Var Graph::stop_gradient(Var a) {
  auto av = value(a);
  return push(rows(a), cols(a), std::vector<double>(av.begin(), av.end()), false);
}

void Graph::backward(Var loss) {
  if (size(loss) != 1) {
    throw ContractError("graph: backward() needs a scalar loss");
  }
  for (auto& n : nodes_) {
    if (n.requires_grad && n.param == nullptr) {
      n.grad.assign(n.value.size(), 0.0);
    }
  }
  Node& out = node(loss);
  if (!out.requires_grad) {
    return;
  }
  grd(loss.id)[0] += 1.0;
  for (std::size_t i = static_cast<std::size_t>(loss.id) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) {
      n.backward();
    }
  }
}

}  // namespace semidial::nn
