#pragma once

#include <stdexcept>
#include <string>

namespace vocemo {

/// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// audio_io
struct MalformedWav : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct UnsupportedRate : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

// features / hmm
struct TooShort : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct Degenerate : Error { using Error::Error; };

// fuzzy_emotion
struct NotNormalized : Error { using Error::Error; };
struct EmptyLabelSet : Error { using Error::Error; };

// corpus
struct MalformedManifest : Error { using Error::Error; };
struct MissingAudio : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct TooFewSubjects : Error { using Error::Error; };

// recognizer
struct InsufficientData : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct MalformedModel : Error { using Error::Error; };

// configuration validation (frame configs, CLI option sets, split fractions)
struct ConfigError : Error { using Error::Error; };

}  // namespace vocemo
