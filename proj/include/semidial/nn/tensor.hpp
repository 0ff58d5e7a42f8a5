#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace semidial::nn {

// Row-major matrix of doubles. Vectors are n x 1.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), value(r * c, 0.0) {}

  std::size_t size() const { return value.size(); }
  double& at(std::size_t r, std::size_t c) { return value[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return value[r * cols + c]; }
  void ensure_grad() {
    if (grad.size() != value.size()) {
      grad.assign(value.size(), 0.0);
    }
  }
};

class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(std::uint64_t seed) : seed_(seed) {}

  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  // Adds a parameter initialized uniformly in [-range, range] from the
  // store's seed and the parameter's position, so the draw does not depend
  // on parameters added later.
  Tensor& add(const std::string& name, std::size_t rows, std::size_t cols, double range);
  Tensor& add_zeros(const std::string& name, std::size_t rows, std::size_t cols);

  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;

  // Insertion order.
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t parameter_count() const;
  std::uint64_t seed() const { return seed_; }

  void zero_grad();
  double grad_norm() const;
  // Rescales gradients so their global L2 norm is at most max_norm.
  void clip_grad_norm(double max_norm);
  void sgd_step(double learning_rate);
  bool all_finite() const;

  // Copies values (not gradients) from a store with identical layout.
  void assign_values(const ParameterStore& other);

  nlohmann::ordered_json to_json() const;
  static ParameterStore from_json(const nlohmann::ordered_json& j);

 private:
  std::uint64_t seed_ = 0;
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Tensor>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace semidial::nn
