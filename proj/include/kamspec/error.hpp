#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kamspec {

enum class Errc {
  invalid_window,
  degenerate_spectrum,
  empty_shift,
  empty_product,
  near_degeneracy,
  invalid_offset,
  invalid_loss,
  not_invertible,
  divergence,
  pole,
  flat_h,
  resonance,
  domain,
  overflow,
  profile,
  rigor_violation,
  degenerate_column,
  symmetry,
  oracle_failure,
  pairing,
  size,
  config,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace kamspec
