#pragma once

#include <stdexcept>
#include <string>

namespace gcnsa {

// Error taxonomy maps onto the CLI exit codes:
//   usage/config -> 1, data -> 2, numerical -> 3.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shape_error : config_error {
  explicit shape_error(const std::string& msg) : config_error(msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gcnsa
