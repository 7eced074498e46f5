#include "socd/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace socd::diffusion {

ScheduleCoeffs DiffusionSchedule::coeffs(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("schedule time must lie in [0, 1]");
  const double b = integral(t);
  ScheduleCoeffs c;
  c.alpha = std::exp(-0.5 * b);
  c.sigma = std::sqrt(-std::expm1(-b));
  c.drift = -0.5 * rate(t);
  // d sigma^2/dt - 2 drift sigma^2 = omega e^{-b} + omega (1 - e^{-b})
  c.g2 = rate(t);
  return c;
}

double DiffusionSchedule::half_log_snr(double t) const {
  const double b = integral(t);
  return -0.5 * b - 0.5 * std::log(-std::expm1(-b));
}

double DiffusionSchedule::time_at(double lambda) const {
  // integral(t) = log1p(exp(-2 lambda)); solve the quadratic for t
  const double b = std::log1p(std::exp(-2.0 * lambda));
  const double k = omega_max - omega_min;
  const double t = k == 0.0 ? b / omega_min : 2.0 * b / (omega_min + std::sqrt(omega_min * omega_min + 2.0 * k * b));
  if (!(t >= 0.0 && t <= 1.0 + 1e-12)) throw std::domain_error("time_at: half log-SNR outside the schedule");
  return std::min(t, 1.0);
}

}  // namespace socd::diffusion
