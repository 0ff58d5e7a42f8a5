#include "semidial/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "semidial/error.hpp"

namespace semidial::nn {

namespace {

double evaluate(const LossBuilder& loss) {
  Graph g(false);
  const double v = g.scalar(loss(g));
  if (!std::isfinite(v)) {
    throw CheckError("grad_check: loss is not finite");
  }
  return v;
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, ParameterStore& params, double tolerance,
                           const GradCheckOptions& options) {
  params.zero_grad();
  {
    Graph g;
    Var out = loss(g);
    if (!std::isfinite(g.scalar(out))) {
      throw CheckError("grad_check: loss is not finite");
    }
    g.backward(out);
  }
  GradCheckReport report;
  for (const auto& name : params.names()) {
    Tensor& t = params.get(name);
    const std::vector<double> analytic = t.grad;
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      const double saved = t.value[i];
      t.value[i] = saved + options.step;
      const double up = evaluate(loss);
      t.value[i] = saved - options.step;
      const double down = evaluate(loss);
      t.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_relative_error || report.worst_parameter.empty()) {
        report.max_relative_error = std::max(rel, report.max_relative_error);
        if (rel >= report.max_relative_error) {
          report.worst_parameter = name;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_relative_error < tolerance;
  params.zero_grad();
  return report;
}

}  // namespace semidial::nn
