#pragma once

#include <stdexcept>
#include <string>

namespace dgcl {

// Root of every error thrown by the library. Subclasses name the failing
// contract so callers (and the CLI) can report them uniformly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class DatasetError : public Error { using Error::Error; };
class SamplingError : public Error { using Error::Error; };
class CheckpointError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };

}  // namespace dgcl
