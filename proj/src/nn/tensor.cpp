#include "semidial/nn/tensor.hpp"

#include <cmath>
#include <random>

#include "semidial/error.hpp"

namespace semidial::nn {

ParameterStore::ParameterStore(const ParameterStore& other)
    : seed_(other.seed_), names_(other.names_), index_(other.index_) {
  tensors_.reserve(other.tensors_.size());
  for (const auto& t : other.tensors_) {
    tensors_.push_back(std::make_unique<Tensor>(*t));
  }
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this != &other) {
    ParameterStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor& ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols,
                            double range) {
  Tensor& t = add_zeros(name, rows, cols);
  std::seed_seq seq{seed_, static_cast<std::uint64_t>(names_.size())};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& v : t.value) {
    v = dist(rng);
  }
  return t;
}

Tensor& ParameterStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  if (index_.count(name)) {
    throw ContractError("duplicate parameter name '" + name + "'");
  }
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.push_back(std::make_unique<Tensor>(rows, cols));
  return *tensors_.back();
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

Tensor& ParameterStore::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ContractError("unknown parameter '" + std::string(name) + "'");
  }
  return *tensors_[it->second];
}

const Tensor& ParameterStore::get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ContractError("unknown parameter '" + std::string(name) + "'");
  }
  return *tensors_[it->second];
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) {
    n += t->size();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& t : tensors_) {
    t->grad.assign(t->value.size(), 0.0);
  }
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& t : tensors_) {
    for (double g : t->grad) {
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

void ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) {
    return;
  }
  const double scale = max_norm / norm;
  for (auto& t : tensors_) {
    for (double& g : t->grad) {
      g *= scale;
    }
  }
}

void ParameterStore::sgd_step(double learning_rate) {
  for (auto& t : tensors_) {
    if (t->grad.size() != t->value.size()) {
      continue;
    }
    for (std::size_t i = 0; i < t->value.size(); ++i) {
      t->value[i] -= learning_rate * t->grad[i];
    }
  }
}

bool ParameterStore::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t->value) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
  }
  return true;
}

void ParameterStore::assign_values(const ParameterStore& other) {
  if (other.names_ != names_) {
    throw ContractError("parameter layouts differ");
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    tensors_[i]->value = other.tensors_[i]->value;
  }
}

nlohmann::ordered_json ParameterStore::to_json() const {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const Tensor& t = *tensors_[i];
    params[names_[i]] = {{"shape", {t.rows, t.cols}}, {"values", t.value}};
  }
  return {{"seed", seed_}, {"parameters", params}};
}

ParameterStore ParameterStore::from_json(const nlohmann::ordered_json& j) {
  try {
    ParameterStore store(j.at("seed").get<std::uint64_t>());
    for (const auto& [name, entry] : j.at("parameters").items()) {
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) {
        throw LoadError("checkpoint: parameter '" + name + "' must be two-dimensional");
      }
      Tensor& t = store.add_zeros(name, shape[0], shape[1]);
      t.value = entry.at("values").get<std::vector<double>>();
      if (t.value.size() != shape[0] * shape[1]) {
        throw LoadError("checkpoint: parameter '" + name + "' has wrong element count");
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace semidial::nn
