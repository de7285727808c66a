#pragma once

#include <stdexcept>
#include <string>

namespace wsl {

/// Base of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define WSL_ERROR(Name)                 \
  struct Name : Error {                 \
    using Error::Error;                 \
  };

WSL_ERROR(NonPositiveCurvature)
WSL_ERROR(GridTooCoarse)
WSL_ERROR(OutOfDomain)
WSL_ERROR(DegenerateJacobian)
WSL_ERROR(HypothesisViolated)
WSL_ERROR(MeshFailure)
WSL_ERROR(SolverNoConvergence)
WSL_ERROR(FactorizationFailure)
WSL_ERROR(ExtrapolationUnstable)
WSL_ERROR(DimensionMismatch)
WSL_ERROR(NegativeWeight)
WSL_ERROR(ZeroVector)
WSL_ERROR(NoCertificateFound)
WSL_ERROR(OverlappingPartition)
WSL_ERROR(ConfigError)

#undef WSL_ERROR

}  // namespace wsl
