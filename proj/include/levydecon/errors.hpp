#pragma once

#include <stdexcept>
#include <string>

namespace levydecon {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Failure of a numerical procedure (CLI exit code 3).
class NumericalError : public Error
{
public:
  using Error::Error;
};

#define LEVYDECON_NUMERICAL_ERROR(Name)                                        \
  class Name : public NumericalError                                           \
  {                                                                            \
  public:                                                                      \
    using NumericalError::NumericalError;                                      \
  };

LEVYDECON_NUMERICAL_ERROR(BoundaryLeakage)
LEVYDECON_NUMERICAL_ERROR(UnsupportedKernel)
LEVYDECON_NUMERICAL_ERROR(UnboundedKernel)
LEVYDECON_NUMERICAL_ERROR(IntegrabilityViolation)
LEVYDECON_NUMERICAL_ERROR(DegenerateBound)
LEVYDECON_NUMERICAL_ERROR(QuadratureDivergence)
LEVYDECON_NUMERICAL_ERROR(DomainError)
LEVYDECON_NUMERICAL_ERROR(EmptySpectrum)
LEVYDECON_NUMERICAL_ERROR(DegenerateSearch)
LEVYDECON_NUMERICAL_ERROR(GridMismatch)

#undef LEVYDECON_NUMERICAL_ERROR

} // namespace levydecon
