#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hg {

enum class Errc {
  InvalidArgument,
  SingularMatrix,
  NoConvergence,
  Diverged,
  NotSymmetric,
  Breakdown,
  InvalidConstants,
  InvalidLabels,
  ConfigError,
  IoError,
  SchemaError,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hg
