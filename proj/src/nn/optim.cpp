#include "semidial/nn/optim.hpp"

#include <cmath>

#include "semidial/error.hpp"

namespace semidial::nn {

void Adam::step(ParameterStore& params) {
  const auto& names = params.names();
  if (m_.empty()) {
    for (const auto& name : names) {
      m_.emplace_back(params.get(name).size(), 0.0);
      v_.emplace_back(params.get(name).size(), 0.0);
    }
  }
  if (m_.size() != names.size()) {
    throw ContractError("adam: parameter layout changed between steps");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < names.size(); ++p) {
    Tensor& t = params.get(names[p]);
    if (t.grad.size() != t.value.size()) continue;
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      const double g = t.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      t.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

}  // namespace semidial::nn
