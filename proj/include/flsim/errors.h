// Copyright 2026 The flsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLSIM_ERRORS_H_
#define FLSIM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace flsim {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration or incompatible dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `field()` names the offending header field or section.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in a state where it has no meaning.
class MisuseError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant, e.g. parameter vectors of different layouts.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace flsim

#endif  // FLSIM_ERRORS_H_
