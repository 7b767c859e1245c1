#pragma once

#include <stdexcept>
#include <string>

namespace pgd {

enum class Errc {
  invalid_dimension,
  degenerate_projection,
  dimension_mismatch,
  domain,
  invalid_config,
  io,
};

const char* to_string(Errc code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_dimension: return "invalid dimension";
    case Errc::degenerate_projection: return "degenerate projection";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::domain: return "domain error";
    case Errc::invalid_config: return "invalid config";
    case Errc::io: return "io error";
  }
  return "error";
}

}  // namespace pgd
