#pragma once

#include <stdexcept>
#include <string>

namespace rofsim {

/// Base of every error thrown by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: a parameter, scenario key, or request that can never succeed.
/// The CLI maps this family to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Failure while running an otherwise valid computation (exit code 3).
class SimulationError : public Error {
public:
    using Error::Error;
};

#define ROFSIM_DECLARE_ERROR(Name, Base) \
    class Name : public Base {           \
    public:                              \
        using Base::Base;                \
    };

// signal core
ROFSIM_DECLARE_ERROR(AliasError, ValidationError)
ROFSIM_DECLARE_ERROR(ResolutionError, ValidationError)
ROFSIM_DECLARE_ERROR(RangeError, ValidationError)
ROFSIM_DECLARE_ERROR(FilterSpecError, ValidationError)
ROFSIM_DECLARE_ERROR(UnsupportedConstellation, ValidationError)
ROFSIM_DECLARE_ERROR(LockError, SimulationError)

// optics
ROFSIM_DECLARE_ERROR(GridError, ValidationError)
ROFSIM_DECLARE_ERROR(RailConflict, ValidationError)
ROFSIM_DECLARE_ERROR(GainNotAllowed, ValidationError)

// link
ROFSIM_DECLARE_ERROR(DelayRangeError, ValidationError)

// tuner
ROFSIM_DECLARE_ERROR(AttenuatorInfeasible, ValidationError)
ROFSIM_DECLARE_ERROR(DivisionByZero, ValidationError)
ROFSIM_DECLARE_ERROR(DegenerateScan, SimulationError)

// cli / io
ROFSIM_DECLARE_ERROR(ParseError, ValidationError)
ROFSIM_DECLARE_ERROR(AxisError, ValidationError)
ROFSIM_DECLARE_ERROR(TapError, ValidationError)

#undef ROFSIM_DECLARE_ERROR

}  // namespace rofsim
