#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace embedlab {

// Domain failure with a stable machine-readable code. The CLI prints errors
// as a single stderr line "code=<Code> detail=<message>", so codes must stay
// alphabetic and stable across releases.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail),
        code_(std::move(code)),
        detail_(detail) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

[[noreturn]] inline void fail(std::string code, const std::string& detail) {
  throw Error(std::move(code), detail);
}

}  // namespace embedlab
