#ifndef ADMMRNN_ERRORS_HPP
#define ADMMRNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace admmrnn {

// Error categories; the CLI maps each to a distinct exit code.
struct shape_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace admmrnn

#endif
