#pragma once

#include <cstddef>
#include <vector>

#include "semidial/nn/tensor.hpp"

namespace semidial::nn {

// Adam with bias correction. Moments are kept per parameter in store order,
// so one instance must only ever step one store layout.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParameterStore& params);
  std::size_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace semidial::nn
