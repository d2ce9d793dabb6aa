#ifndef COVERID_ERRORS_HPP
#define COVERID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coverid {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Preprocessing
struct ZeroSalienceError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };

// Loss / training
struct DegenerateBatchError : Error { using Error::Error; };
struct DegenerateCatalogError : Error { using Error::Error; };
struct InvalidConfigError : Error { using Error::Error; };

struct DivergedTrainingError : Error {
    explicit DivergedTrainingError(int step)
        : Error("training diverged at step " + std::to_string(step)), step(step) {}
    int step;
};

// Catalog / store
struct DuplicateTrackError : Error { using Error::Error; };
struct MissingSelfReferenceError : Error { using Error::Error; };
struct EmptyStoreError : Error { using Error::Error; };

// Metrics
struct UndefinedMetricError : Error { using Error::Error; };

// Live identification
struct TooShortError : Error { using Error::Error; };

// File I/O
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

} // namespace coverid

#endif
