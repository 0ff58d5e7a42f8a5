#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "semidial/nn/graph.hpp"
#include "semidial/nn/tensor.hpp"

namespace semidial::nn {

struct GradCheckOptions {
  double step = 1e-5;
  // Relative errors are taken against max(|analytic|, |numeric|, floor) so
  // that near-zero entries are judged by absolute error.
  double denominator_floor = 1e-4;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

// Builds a scalar loss on a fresh graph from the parameters in the store.
// Must be deterministic.
using LossBuilder = std::function<Var(Graph&)>;

// Compares the reverse-mode gradient of every parameter entry against
// central finite differences. Throws CheckError on a non-finite loss.
GradCheckReport grad_check(const LossBuilder& loss, ParameterStore& params, double tolerance,
                           const GradCheckOptions& options = {});

}  // namespace semidial::nn
