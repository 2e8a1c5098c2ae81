#pragma once

#include <stdexcept>
#include <string>

namespace spikelab {

// Error taxonomy. ConfigError maps to CLI exit code 2, SolverError (and
// derived) to exit code 3; assertion failures are reported separately with
// exit code 1.
struct SpikelabError : std::runtime_error {
  explicit SpikelabError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : SpikelabError {
  using SpikelabError::SpikelabError;
};

struct SolverError : SpikelabError {
  using SpikelabError::SpikelabError;
};

struct NonConvergence : SolverError {
  using SolverError::SolverError;
};

struct PositivityLost : SolverError {
  using SolverError::SolverError;
};

struct KrylovStall : SolverError {
  using SolverError::SolverError;
};

struct SpikeUnresolved : SolverError {
  using SolverError::SolverError;
};

struct NoPositiveMax : SolverError {
  using SolverError::SolverError;
};

struct DecayNotResolved : SolverError {
  using SolverError::SolverError;
};

struct WindowUnderflow : SolverError {
  using SolverError::SolverError;
};

struct AnnulusEmpty : SolverError {
  using SolverError::SolverError;
};

struct InsufficientSpan : SolverError {
  using SolverError::SolverError;
};

struct InvalidExponents : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace spikelab
