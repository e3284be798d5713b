#pragma once

#include <stdexcept>

namespace fgbfi {

/// Malformed numeral, file, or schema field.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Arithmetic between scalars created under different precision contexts.
class PrecisionMismatch : public std::logic_error {
  using std::logic_error::logic_error;
};

/// Series tail failed to drop below eps_pw before max_degree.
class TruncationFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Perturbation set collapsed (Gram-Schmidt residual at noise level) or grew
/// past its scheduling allowance.
class DegeneracyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trajectory left the trapping ball inside a composite computation that
/// cannot report the escape as a result value.
class BallEscapeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fgbfi
