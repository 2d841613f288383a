#include "dgcl/schedule.hpp"

#include <cmath>

#include "dgcl/error.hpp"

namespace dgcl::diffusion {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "quadratic") return ScheduleKind::kQuadratic;
  if (name == "sigmoid") return ScheduleKind::kSigmoid;
  throw ConfigError("unknown beta schedule '" + std::string(name) +
                    "' (expected linear, quadratic or sigmoid)");
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kLinear: return "linear";
    case ScheduleKind::kQuadratic: return "quadratic";
    case ScheduleKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

double NoiseSchedule::sigma(std::size_t t) const { return std::sqrt(posterior_variance.at(t)); }

NoiseSchedule build_schedule(ScheduleKind kind, std::size_t steps, double beta_min,
                             double beta_max) {
  if (steps < 1) throw ConfigError("diffusion steps must be >= 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
    throw ConfigError("beta range must satisfy 0 < beta_min <= beta_max < 1");
  }
  NoiseSchedule s;
  s.kind = kind;
  s.steps = steps;
  s.beta.assign(steps + 1, 0.0);
  s.alpha.assign(steps + 1, 1.0);
  s.alpha_bar.assign(steps + 1, 1.0);
  s.posterior_variance.assign(steps + 1, 0.0);

  auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (std::size_t t = 1; t <= steps; ++t) {
    const double frac =
        steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    double b = beta_min;
    switch (kind) {
      case ScheduleKind::kLinear:
        b = beta_min + (beta_max - beta_min) * frac;
        break;
      case ScheduleKind::kQuadratic: {
        const double r = std::sqrt(beta_min) + (std::sqrt(beta_max) - std::sqrt(beta_min)) * frac;
        b = r * r;
        break;
      }
      case ScheduleKind::kSigmoid: {
        const double lo = logistic(-6.0), hi = logistic(6.0);
        const double y = (logistic(-6.0 + 12.0 * frac) - lo) / (hi - lo);
        b = beta_min + (beta_max - beta_min) * y;
        break;
      }
    }
    if (t == 1) b = beta_min;
    if (t == steps && steps > 1) b = beta_max;
    s.beta[t] = b;
    s.alpha[t] = 1.0 - b;
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.posterior_variance[t] = (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * b;
  }
  return s;
}

}  // namespace dgcl::diffusion
