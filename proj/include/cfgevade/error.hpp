#pragma once

#include <stdexcept>
#include <string>

namespace cfgevade {

// Base of every error raised by the library. Errors are split into usage
// errors (bad configuration / arguments) and data errors (bad input files,
// precondition violations on data) so the CLI can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

#define CFGEVADE_DEFINE_ERROR(Name, Base)   \
  class Name : public Base {                \
   public:                                  \
    explicit Name(const std::string& what)  \
        : Base(#Name ": " + what) {}        \
  }

// graphcore
CFGEVADE_DEFINE_ERROR(MalformedJson, DataError);
CFGEVADE_DEFINE_ERROR(SchemaViolation, DataError);
CFGEVADE_DEFINE_ERROR(ConfigError, UsageError);

// tokenizer
CFGEVADE_DEFINE_ERROR(SizeTooSmall, UsageError);
CFGEVADE_DEFINE_ERROR(SpecialInSpan, DataError);

// model
CFGEVADE_DEFINE_ERROR(ShapeMismatch, DataError);
CFGEVADE_DEFINE_ERROR(UnlabeledSample, DataError);
CFGEVADE_DEFINE_ERROR(DegenerateCorpus, DataError);
CFGEVADE_DEFINE_ERROR(VersionMismatch, DataError);
CFGEVADE_DEFINE_ERROR(CorruptFile, DataError);

// attribution
CFGEVADE_DEFINE_ERROR(SpanOutOfRange, DataError);

// attack
CFGEVADE_DEFINE_ERROR(NotMalicious, DataError);
CFGEVADE_DEFINE_ERROR(NoMaliciousSamples, DataError);

// cli
CFGEVADE_DEFINE_ERROR(UnknownSubcommand, UsageError);

#undef CFGEVADE_DEFINE_ERROR

}  // namespace cfgevade
