#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dgcl::diffusion {

enum class ScheduleKind { kLinear, kQuadratic, kSigmoid };

ScheduleKind parse_schedule_kind(std::string_view name);
std::string to_string(ScheduleKind kind);

// Variance schedule for T steps. Arrays are indexed by step t in 1..T; slot 0
// of alpha_bar holds 1 and is meaningful, slot 0 of the others is unused.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kLinear;
  std::size_t steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> posterior_variance;  // sigma_t^2

  double sigma(std::size_t t) const;
};

// linear: beta evenly spaced on [beta_min, beta_max];
// quadratic: sqrt(beta) evenly spaced, then squared;
// sigmoid: logistic over [-6, 6] rescaled so the endpoints hit beta_min/max.
// T == 1 yields the single value beta_min.
NoiseSchedule build_schedule(ScheduleKind kind, std::size_t steps, double beta_min,
                             double beta_max);

}  // namespace dgcl::diffusion
