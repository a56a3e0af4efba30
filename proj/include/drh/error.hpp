// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <stdexcept>
#include <string>

namespace drh {

// Each kind maps onto one CLI exit code (see tools/drh_cli.cpp).
enum class ErrorKind {
  kInvalidArgument,  // bad shapes, bad flags, violated preconditions
  kData,             // malformed or inconsistent input files
  kNumerical,        // non-finite values, failed convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorKind::kInvalidArgument, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::kData, msg); }
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorKind::kNumerical, msg);
}

}  // namespace drh
