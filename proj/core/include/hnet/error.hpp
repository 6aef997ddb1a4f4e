/* Copyright 2026 The harvestnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace hnet {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { Parse, Validation, Execution };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed input text: graph files, traces, tables, manifests.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
  ParseError(const std::string& source, int line, const std::string& what)
      : Error(ErrorKind::Parse,
              source + ":" + std::to_string(line) + ": " + what) {}
};

// Well-formed input that violates a precondition or invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

// Failure while running: I/O, divergence, missing data discovered late.
class ExecutionError : public Error {
 public:
  explicit ExecutionError(const std::string& what)
      : Error(ErrorKind::Execution, what) {}
};

}  // namespace hnet
