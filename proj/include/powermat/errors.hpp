#ifndef POWERMAT_ERRORS_HPP
#define POWERMAT_ERRORS_HPP

#include <stdexcept>

namespace powermat {

// Base for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched vector lengths (embedding or context dimensions).
struct dimension_error : error {
  using error::error;
};

// Invalid argument values: ratings out of range, bad hyperparameters, ...
struct validation_error : error {
  using error::error;
};

// Non-finite parameter or objective; the message names the offender.
struct numeric_error : error {
  using error::error;
};

// Dataset-level failures: missing file, missing column, zero valid rows.
struct data_error : error {
  using error::error;
};

// Context encoding failures; the message names the column.
struct encoding_error : error {
  using error::error;
};

// Experiment configuration failures.
struct config_error : error {
  using error::error;
};

// Degenerate rank-frequency fit (fewer than 2 positive counts).
struct fit_error : error {
  using error::error;
};

}  // namespace powermat

#endif
