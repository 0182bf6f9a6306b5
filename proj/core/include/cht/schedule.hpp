#pragma once

#include <string>
#include <string_view>

namespace cht {

enum class ScheduleKind { constant, cubic, sigmoid };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Target sparsity as a function of training time t.
///
/// Sparsity rises monotonically from `initial_sparsity` at t0 to
/// `final_sparsity` at t_final, and is held constant outside that window.
/// Time is sampled on the grid t0 + n*dt. `curvature` (k) only affects the
/// sigmoid kind; it is expressed per unit window, so k keeps the same shape on
/// any window length.
struct DensitySchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double initial_sparsity = 0.0;
  double final_sparsity = 0.0;
  double t0 = 0.0;
  double t_final = 1.0;
  double dt = 1.0;
  double curvature = 6.0;

  static DensitySchedule constant(double sparsity);
  static DensitySchedule cubic(double s_i, double s_f, double t0, double t_final, double dt = 1.0);
  static DensitySchedule sigmoid(double s_i, double s_f, double t0, double t_final,
                                 double dt = 1.0, double curvature = 6.0);

  /// Throws InvalidArgument unless 0 <= s_i <= s_f < 1, t0 < t_final, dt > 0
  /// (and s_i == s_f for the constant kind).
  void validate() const;
};

double sparsity_at(const DensitySchedule& schedule, double t);
inline double density_at(const DensitySchedule& schedule, double t) {
  return 1.0 - sparsity_at(schedule, t);
}

/// Shrinks the sigmoid decay window to half of the cubic reference window,
/// which makes the time-integrated density (and so training FLOPs) of the two
/// schedules equal. A constant schedule is returned unchanged.
DensitySchedule equalize_flops(const DensitySchedule& sigmoid, const DensitySchedule& cubic_reference);

}  // namespace cht
