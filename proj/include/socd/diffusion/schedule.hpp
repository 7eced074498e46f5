#pragma once

namespace socd::diffusion {

struct ScheduleCoeffs {
  double alpha = 1.0;
  double sigma = 0.0;
  double drift = 0.0;  // d log(alpha_t)/dt, so f(a, t) = drift * a
  double g2 = 0.0;     // squared diffusion coefficient
};

/// Variance-preserving noise schedule with linear rate
/// omega(t) = (omega_max - omega_min) t + omega_min on the diffusion-time horizon [0, 1].
struct DiffusionSchedule {
  double omega_min = 0.1;
  double omega_max = 20.0;

  double rate(double t) const { return (omega_max - omega_min) * t + omega_min; }
  /// Closed form of the integral of omega over [0, t].
  double integral(double t) const { return 0.5 * (omega_max - omega_min) * t * t + omega_min * t; }

  /// Throws std::domain_error for t outside [0, 1].
  ScheduleCoeffs coeffs(double t) const;
  double alpha(double t) const { return coeffs(t).alpha; }
  double sigma(double t) const { return coeffs(t).sigma; }
  /// log(alpha_t / sigma_t); -inf never occurs for t > 0.
  double half_log_snr(double t) const;
  /// Inverse of half_log_snr; throws std::domain_error outside [half_log_snr(1), inf).
  double time_at(double half_log_snr) const;
};

}  // namespace socd::diffusion
