#pragma once

#include <stdexcept>
#include <string>

namespace recov {

// Base of every error raised by the library. `code()` is a stable
// machine-readable identifier (e.g. "MalformedTrace") that the CLI and the
// HTTP service surface verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define RECOV_DEFINE_ERROR(Name)                                   \
  class Name : public ::recov::Error {                             \
   public:                                                         \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

}  // namespace recov
