#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace colm {

using i64 = std::int64_t;
using u64 = std::uint64_t;

/// Machine-parsable error categories. The CLI prints them as a
/// single-line `E_<CODE>: message` prefix and exits nonzero.
enum class Err {
  Config,    // bad or unknown config key / value
  Data,      // dataset missing or malformed
  Shape,     // tensor extent mismatch
  DType,     // dtype mismatch
  Range,     // index / chain id out of range
  Format,    // checkpoint or file format violation
  Nan,       // non-finite value surfaced
  Io,        // filesystem failure
  Arg,       // bad CLI argument
  Internal,  // invariant violation (bug)
};

inline const char* err_code(Err e) {
  switch (e) {
    case Err::Config: return "E_CONFIG";
    case Err::Data: return "E_DATA";
    case Err::Shape: return "E_SHAPE";
    case Err::DType: return "E_DTYPE";
    case Err::Range: return "E_RANGE";
    case Err::Format: return "E_FORMAT";
    case Err::Nan: return "E_NAN";
    case Err::Io: return "E_IO";
    case Err::Arg: return "E_ARG";
    case Err::Internal: return "E_INTERNAL";
  }
  return "E_INTERNAL";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_code(code)) + ": " + msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

}  // namespace colm

// Precondition check; `msg` is a stream expression.
#define COLM_CHECK(cond, code, msg)                  \
  do {                                               \
    if (!(cond)) {                                   \
      std::ostringstream oss_;                       \
      oss_ << msg;                                   \
      throw ::colm::Error(::colm::Err::code, oss_.str()); \
    }                                                \
  } while (0)
