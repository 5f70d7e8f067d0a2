#pragma once

#include <stdexcept>
#include <string>

namespace semlab {

// Base class for all library errors so callers can catch semlab failures
// separately from std:: ones.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

// Invalid parameter values or malformed structure specs.
struct ValidationError : Error {
    using Error::Error;
};

// Request that cannot be satisfied for counting reasons (e.g. more
// orthogonal directions than dimensions).
struct InfeasibleError : Error {
    using Error::Error;
};

struct EmptyCorpusError : Error {
    using Error::Error;
};

struct DegenerateVocabError : Error {
    using Error::Error;
};

struct InsufficientContextError : Error {
    using Error::Error;
};

struct OutOfVocabularyError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct DeadFeatureError : Error {
    using Error::Error;
};

struct UnmatchedParentError : Error {
    using Error::Error;
};

struct VocabularyMismatchError : Error {
    using Error::Error;
};

struct UndefinedSimilarityError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct LookupError : Error {
    using Error::Error;
};

// Thrown when a training loop produces a non-finite loss. Remembers the
// last epoch that completed with finite values (-1 if none did).
struct TrainingDivergedError : Error {
    int last_good_epoch;
    TrainingDivergedError(const std::string& msg, int epoch)
        : Error(msg), last_good_epoch(epoch) {}
};

}  // namespace semlab
