#include "hg/error.hpp"

namespace hg {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::Diverged: return "Diverged";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::Breakdown: return "Breakdown";
    case Errc::InvalidConstants: return "InvalidConstants";
    case Errc::InvalidLabels: return "InvalidLabels";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace hg
