#include "drpo/optim.hpp"

#include <algorithm>
#include <cmath>

#include "drpo/error.hpp"

namespace drpo {

void rmsprop_step(std::span<double> params, std::span<const double> grads, RmspropState& state,
                  double lr) {
  if (params.size() != grads.size() || params.size() != state.accumulators.size()) {
    throw DomainError("rmsprop_step: parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& a = state.accumulators[i];
    a = state.rho * a + (1.0 - state.rho) * g * g;
    params[i] -= lr * g / (std::sqrt(a) + state.eps);
  }
}

double warmup_lr(std::size_t step, double base_lr, std::size_t warmup_steps) {
  if (warmup_steps == 0) return base_lr;
  return base_lr * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
}

}  // namespace drpo
