#pragma once

#include <stdexcept>
#include <string>

namespace kwi {

/// Base class for all solver and validation failures in this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateEquilibrium : Error { using Error::Error; };
struct SpectralSplitFailure : Error { using Error::Error; };
struct StepSizeUnderflow : Error { using Error::Error; };
struct NewtonDivergence : Error { using Error::Error; };
struct WrongWindingNumber : Error { using Error::Error; };
struct SingularLinearSystem : Error { using Error::Error; };
struct NoSignChange : Error { using Error::Error; };
struct EscapedBasin : Error { using Error::Error; };
struct DegenerateSection : Error { using Error::Error; };
struct LostOrbit : Error { using Error::Error; };
struct NoCrossing : Error { using Error::Error; };
struct WrongPayload : Error { using Error::Error; };

} // namespace kwi
