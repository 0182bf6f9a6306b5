#include "cht/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "cht/error.hpp"

namespace cht {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Logistic on [0, 1] centred at 1/2, rescaled so that it is exactly 0 and 1 at the ends.
double unit_sigmoid(double x, double k) {
  const double lo = logistic(-0.5 * k);
  const double hi = logistic(0.5 * k);
  return (logistic(k * (x - 0.5)) - lo) / (hi - lo);
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cubic: return "cubic";
    case ScheduleKind::sigmoid: return "sigmoid";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "cubic") return ScheduleKind::cubic;
  if (name == "sigmoid") return ScheduleKind::sigmoid;
  throw InvalidArgument("unknown schedule kind '" + std::string(name) + "'");
}

DensitySchedule DensitySchedule::constant(double sparsity) {
  DensitySchedule s;
  s.kind = ScheduleKind::constant;
  s.initial_sparsity = sparsity;
  s.final_sparsity = sparsity;
  s.validate();
  return s;
}

DensitySchedule DensitySchedule::cubic(double s_i, double s_f, double t0, double t_final,
                                       double dt) {
  DensitySchedule s{ScheduleKind::cubic, s_i, s_f, t0, t_final, dt, 6.0};
  s.validate();
  return s;
}

DensitySchedule DensitySchedule::sigmoid(double s_i, double s_f, double t0, double t_final,
                                         double dt, double curvature) {
  DensitySchedule s{ScheduleKind::sigmoid, s_i, s_f, t0, t_final, dt, curvature};
  s.validate();
  return s;
}

void DensitySchedule::validate() const {
  if (!(initial_sparsity >= 0.0 && initial_sparsity <= final_sparsity && final_sparsity < 1.0)) {
    throw InvalidArgument("schedule: require 0 <= initial sparsity <= final sparsity < 1");
  }
  if (kind == ScheduleKind::constant) {
    if (initial_sparsity != final_sparsity) {
      throw InvalidArgument("schedule: constant schedule needs equal initial and final sparsity");
    }
    return;
  }
  if (!(t0 < t_final)) throw InvalidArgument("schedule: require t0 < t_final");
  if (!(dt > 0.0)) throw InvalidArgument("schedule: require dt > 0");
  if (kind == ScheduleKind::sigmoid && !(curvature > 0.0)) {
    throw InvalidArgument("schedule: sigmoid curvature must be positive");
  }
}

double sparsity_at(const DensitySchedule& s, double t) {
  if (s.kind == ScheduleKind::constant) return s.initial_sparsity;
  if (t <= s.t0) return s.initial_sparsity;
  if (t >= s.t_final) return s.final_sparsity;

  const double snapped = s.t0 + std::floor((t - s.t0) / s.dt) * s.dt;
  if (snapped >= s.t_final) return s.final_sparsity;
  const double x = (snapped - s.t0) / (s.t_final - s.t0);

  double value = s.initial_sparsity;
  if (s.kind == ScheduleKind::cubic) {
    const double rest = 1.0 - x;
    value = s.final_sparsity + (s.initial_sparsity - s.final_sparsity) * rest * rest * rest;
  } else {
    value = s.initial_sparsity +
            (s.final_sparsity - s.initial_sparsity) * unit_sigmoid(x, s.curvature);
  }
  return std::clamp(value, s.initial_sparsity, s.final_sparsity);
}

DensitySchedule equalize_flops(const DensitySchedule& sigmoid,
                               const DensitySchedule& cubic_reference) {
  if (sigmoid.kind == ScheduleKind::constant) return sigmoid;
  if (sigmoid.kind != ScheduleKind::sigmoid || cubic_reference.kind != ScheduleKind::cubic) {
    throw InvalidArgument("equalize_flops: expected a sigmoid schedule and a cubic reference");
  }
  if (sigmoid.initial_sparsity != cubic_reference.initial_sparsity ||
      sigmoid.final_sparsity != cubic_reference.final_sparsity ||
      sigmoid.t0 != cubic_reference.t0) {
    throw InvalidArgument("equalize_flops: schedules must share initial/final sparsity and t0");
  }
  DensitySchedule out = sigmoid;
  out.t_final = cubic_reference.t0 + 0.5 * (cubic_reference.t_final - cubic_reference.t0);
  out.validate();
  return out;
}

}  // namespace cht
