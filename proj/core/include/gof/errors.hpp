// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gof {

/// Bad or unreadable user input: missing files, malformed headers, invalid
/// cameras, out-of-range configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. A subclass of InputError so callers that only care
/// about "the input was bad" can catch one type.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

/// A computation produced a non-finite value or violated a numerical
/// precondition (divergence, non-bracketing edges, degenerate point sets).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Routes warnings to `handler`; an empty handler restores the stderr default.
/// Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace gof
