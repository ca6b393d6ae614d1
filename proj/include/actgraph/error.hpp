#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actgraph {

enum class Errc {
  kBadMagic,
  kTruncated,
  kShapeMismatch,
  kNonFiniteData,
  kCountMismatch,
  kIo,
  kBadHeader,
  kUnsupportedVersion,
  kSpecMismatch,
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyClass,
  kNoFaults,
  kDiverged,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so
/// callers can distinguish data problems from usage problems.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  Errc code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace actgraph
