#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drpo {

/// RMSProp accumulators: a <- rho*a + (1-rho)*g^2, p <- p - lr*g/(sqrt(a)+eps).
struct RmspropState {
  std::vector<double> accumulators;
  double rho = 0.99;
  double eps = 1e-8;

  explicit RmspropState(std::size_t n = 0) : accumulators(n, 0.0) {}
};

/// Throws DomainError when the three spans disagree in length.
void rmsprop_step(std::span<double> params, std::span<const double> grads, RmspropState& state,
                  double lr);

/// Linear warmup from 0: lr * min(1, step / warmup_steps).
double warmup_lr(std::size_t step, double base_lr, std::size_t warmup_steps);

}  // namespace drpo
