#include "naf/core/error.hpp"

namespace naf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_shape: return "invalid-shape";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::invalid_dataset: return "invalid-dataset";
    case ErrorKind::decode: return "decode";
    case ErrorKind::estimation_failure: return "estimation-failure";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::io: return "io";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

}  // namespace naf
