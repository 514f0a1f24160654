#pragma once

#include <stdexcept>
#include <string>

namespace timesynth {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller handed in malformed data (non-finite values, wrong lengths, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A configuration document or parameter range is unusable.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Optimization diverged or otherwise aborted.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace timesynth
