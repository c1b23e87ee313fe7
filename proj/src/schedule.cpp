#include <cmath>
#include <numeric>

#include "gamc/errors.hpp"
#include "gamc/gamc.hpp"

namespace gamc {

Schedule Schedule::exponential(double r) {
  Schedule s;
  s.family = Family::exponential;
  s.rate = r;
  return s;
}

Schedule Schedule::constant(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("constant schedule must lie in [0,1]");
  Schedule s;
  s.family = Family::constant;
  s.value = v;
  return s;
}

Schedule Schedule::table(std::vector<double> values) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidParams("schedule table entries must lie in [0,1]");
  }
  Schedule s;
  s.family = Family::table;
  s.values = std::move(values);
  return s;
}

double schedule_prob(const Schedule& s, std::size_t k) {
  switch (s.family) {
    case Schedule::Family::exponential:
      return std::exp(-s.rate * static_cast<double>(k));
    case Schedule::Family::constant:
      return s.value;
    case Schedule::Family::table:
      return k < s.values.size() ? s.values[k] : 0.0;
  }
  return 0.0;
}

ScheduleCheck validate_schedule(const Schedule& s, std::size_t m) {
  switch (s.family) {
    case Schedule::Family::exponential:
      if (s.rate > 0.0) return {};
      return {ScheduleStatus::warning, "exponential schedule needs r > 0 for a finite sum"};
    case Schedule::Family::constant:
      if (s.value == 0.0) return {};
      return {ScheduleStatus::warning, "constant schedule has a divergent sum"};
    case Schedule::Family::table: {
      const std::size_t len = std::min(s.values.size(), m == 0 ? s.values.size() : m);
      const double tail = std::accumulate(s.values.begin() + static_cast<std::ptrdiff_t>(len / 2),
                                          s.values.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
      if (tail < s.tail_threshold) return {};
      return {ScheduleStatus::warning, "schedule table tail sum " + std::to_string(tail) + " exceeds threshold"};
    }
  }
  return {};
}

double mean_schedule_weight(const Schedule& s, std::size_t m) {
  if (m == 0) return 0.0;
  const double md = static_cast<double>(m);
  switch (s.family) {
    case Schedule::Family::exponential:
      if (s.rate == 0.0) return 1.0;
      return std::expm1(-s.rate * md) / (md * std::expm1(-s.rate));
    case Schedule::Family::constant:
      return s.value;
    case Schedule::Family::table: {
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += schedule_prob(s, k);
      return sum / md;
    }
  }
  return 0.0;
}

double expected_complexity(double c_g, double c_a, const Schedule& s, std::size_t m) {
  if (!(c_g >= 0.0 && c_a >= 0.0)) throw InvalidParams("expected_complexity: costs must be non-negative");
  const double w = mean_schedule_weight(s, m);
  return w * c_g + (1.0 - w) * c_a;
}

}  // namespace gamc
