#pragma once

#include <stdexcept>
#include <string>

namespace gnet {

// Failure categories. The CLI maps these onto its documented exit codes.
enum class ErrorKind {
  Io,        // missing or unreadable files
  Format,    // parse failures, bad magic bytes, fingerprint mismatch
  Shape,     // tensor or model shape precondition violations
  Capacity,  // chip capacity limits exceeded
  Internal,  // invariant breakage that should never happen
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gnet
