#include "naf/diffcalc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "naf/core/error.hpp"
#include "naf/core/rng.hpp"

namespace naf::diffcalc {

namespace {

double evaluate(const LossBuilder& build) {
  Graph<double> g;
  return build(g).item();
}

}  // namespace

GradCheckResult gradcheck(const LossBuilder& build, const std::vector<Tensor<double>*>& params, double h,
                          std::size_t samples, std::uint64_t seed) {
  std::size_t total = 0;
  for (Tensor<double>* p : params) {
    if (!p->requires_grad) fail(ErrorKind::invalid_input, "gradcheck: parameter without requires_grad");
    p->zero_grad();
    total += p->size();
  }
  if (total == 0) fail(ErrorKind::invalid_input, "gradcheck: no parameters");
  {
    Graph<double> g;
    g.backward(build(g));
  }

  GradCheckResult result;
  Rng rng(seed);
  const double f0 = evaluate(build);
  std::size_t attempts = 0;
  while (result.checked < samples) {
    if (++attempts > 20 * samples) fail(ErrorKind::invalid_input, "gradcheck: too many non-smooth coordinates");
    std::size_t flat = rng.below(total);
    std::size_t k = 0;
    while (flat >= params[k]->size()) flat -= params[k++]->size();
    double& x = params[k]->values[flat];
    const double saved = x;
    x = saved + h;
    const double fp = evaluate(build);
    x = saved - h;
    const double fm = evaluate(build);
    x = saved;

    const double right = (fp - f0) / h;
    const double left = (f0 - fm) / h;
    if (std::abs(right - left) > 1e-2 * std::max({std::abs(right), std::abs(left), 1e-8})) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = params[k]->grad[flat];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.checked;
  }
  return result;
}

}  // namespace naf::diffcalc
