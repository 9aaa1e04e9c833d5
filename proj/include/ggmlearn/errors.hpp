#pragma once

#include <stdexcept>
#include <string>

namespace ggmlearn {

// Base for everything thrown by this library. `validation` errors are caller
// mistakes (bad parameters, malformed input); everything else is a numerical
// failure of an otherwise well-posed computation. The CLI maps the two kinds
// to exit codes 2 and 3.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual bool validation() const { return false; }
};

struct ValidationError : Error {
    using Error::Error;
    bool validation() const override { return true; }
};

struct NumericError : Error {
    using Error::Error;
};

// --- validation family ---
struct BadParamsError : ValidationError { using ValidationError::ValidationError; };
struct UnknownNameError : ValidationError { using ValidationError::ValidationError; };
struct IndexOutOfRangeError : ValidationError { using ValidationError::ValidationError; };
struct DimensionMismatchError : ValidationError { using ValidationError::ValidationError; };
struct TooFewSamplesError : ValidationError { using ValidationError::ValidationError; };
struct EmptySplitError : ValidationError { using ValidationError::ValidationError; };
struct MissingNodeError : ValidationError { using ValidationError::ValidationError; };
struct TooLargeError : ValidationError { using ValidationError::ValidationError; };
struct EnumerationBudgetError : ValidationError { using ValidationError::ValidationError; };
struct ZeroDiagonalError : ValidationError { using ValidationError::ValidationError; };

// --- numerical family ---
struct NotPdError : NumericError { using NumericError::NumericError; };
struct NotSddError : NumericError { using NumericError::NumericError; };
struct NotWalkSummableError : NumericError { using NumericError::NumericError; };
struct NotAttractiveError : NumericError { using NumericError::NumericError; };
struct RankDeficientError : NumericError { using NumericError::NumericError; };
struct SingularBlockError : NumericError { using NumericError::NumericError; };
struct SingularSubmatrixError : NumericError { using NumericError::NumericError; };
struct SingularLaplacianError : NumericError { using NumericError::NumericError; };
struct SingularCovarianceError : NumericError { using NumericError::NumericError; };
struct ZeroVarianceColumnError : NumericError { using NumericError::NumericError; };
struct NoConvergenceError : NumericError { using NumericError::NumericError; };

struct UnattainableError : Error {
    int m_max;
    UnattainableError(const std::string& msg, int cap) : Error(msg), m_max(cap) {}
};

}  // namespace ggmlearn
