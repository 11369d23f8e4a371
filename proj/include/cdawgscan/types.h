#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace cdawgscan {

using TokenId = std::uint32_t;
using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

// Half-open range [alpha, omega) of corpus token positions.
struct Span {
  std::uint64_t alpha = 0;
  std::uint64_t omega = 0;

  std::uint64_t size() const { return omega - alpha; }
  bool empty() const { return alpha == omega; }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class ErrorKind {
  kUsage,
  kFormat,       // malformed or unparsable input
  kValidation,   // parsed, but violates a data invariant
  kVersion,      // index header magic/version mismatch
  kCorrupt,      // truncated file or checksum failure
  kCapacity,     // handle width exceeded
  kState,        // operation called in the wrong lifecycle state
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cdawgscan
