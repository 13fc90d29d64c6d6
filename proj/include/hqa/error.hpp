#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hqa {

enum class errc {
  invalid_truncation,
  index_out_of_range,
  dimension_mismatch,
  space_mismatch,
  shape_mismatch,
  invalid_argument,
  missing_drive_frequency,
  not_hermitian,
  degenerate_gap,
  ill_posed_instance,
  too_many_sectors,
  integration_failure,
  config_error,
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

// Thrown by the time integrator when the requested local error cannot be met
// within the step budget. Carries enough state to diagnose the failure.
class integration_failure : public error {
 public:
  integration_failure(const std::string& what, double reached_time, double error_estimate,
                      std::size_t steps)
      : error(errc::integration_failure, what),
        reached_time_(reached_time),
        error_estimate_(error_estimate),
        steps_(steps) {}

  double reached_time() const noexcept { return reached_time_; }
  double error_estimate() const noexcept { return error_estimate_; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  double reached_time_;
  double error_estimate_;
  std::size_t steps_;
};

class config_error : public error {
 public:
  config_error(const std::string& what, std::size_t line, std::string field)
      : error(errc::config_error, what), line_(line), field_(std::move(field)) {}

  /// 1-based line in the config text, 0 when the problem is not tied to a line.
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace hqa
