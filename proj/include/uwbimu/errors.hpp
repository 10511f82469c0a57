// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace uwbimu {

/// Precondition violated by the caller (bad dimensions, negative dt, ...).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Query outside the domain of a time-bounded object.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario/config. `path()` names the offending field, e.g. "noise.sigma_r".
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

/// Malformed input data (out-of-order records, unknown anchors, ...).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace uwbimu
