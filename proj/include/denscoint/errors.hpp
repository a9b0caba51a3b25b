#pragma once

#include <stdexcept>
#include <string>

namespace denscoint {

/// Bad or inconsistent input. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that could not be carried out. The CLI maps these to exit code 3.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DENSCOINT_ERROR(Name, Base)   \
  class Name : public Base {          \
   public:                            \
    using Base::Base;                 \
  };

DENSCOINT_ERROR(DimensionError, InputError)
DENSCOINT_ERROR(DomainNonPositive, InputError)
DENSCOINT_ERROR(ConfigError, InputError)
DENSCOINT_ERROR(FormatError, InputError)
DENSCOINT_ERROR(DegenerateData, InputError)
DENSCOINT_ERROR(RankError, InputError)

DENSCOINT_ERROR(OverflowError, NumericalFailure)
DENSCOINT_ERROR(NumericalError, NumericalFailure)
DENSCOINT_ERROR(DegenerateBasis, NumericalFailure)
DENSCOINT_ERROR(NotSingular, NumericalFailure)
DENSCOINT_ERROR(NotI1, NumericalFailure)
DENSCOINT_ERROR(Indeterminate, NumericalFailure)
DENSCOINT_ERROR(SingularWeight, NumericalFailure)
DENSCOINT_ERROR(EmptyWindow, NumericalFailure)
DENSCOINT_ERROR(NotConverged, NumericalFailure)
DENSCOINT_ERROR(BandwidthSelectionFailed, NumericalFailure)

#undef DENSCOINT_ERROR

}  // namespace denscoint
