// Copyright 2026 The vqastate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vqastate {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldIssue {
  std::string field;
  std::string message;

  bool operator==(const FieldIssue&) const = default;
};

// Raised when a domain value violates one of its invariants. Carries one
// issue per offending field so HTTP callers can render diagnostics.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldIssue> issues);
  ValidationError(std::string field, std::string message);

  const std::vector<FieldIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<FieldIssue> issues_;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MissingLabelError : public Error {
 public:
  using Error::Error;
};

// Backend failures. TransportError covers connection problems and timeouts,
// ProtocolError a reply that does not follow the wire contract, and
// BackendError a failure reported by the server itself.
class TransportError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  BackendError(std::string message, int status = 0);

  int status() const noexcept { return status_; }
  // 501 means the capability is missing; retrying cannot help.
  bool retryable() const noexcept {
    return status_ == 429 || (status_ >= 500 && status_ != 501);
  }

 private:
  int status_;
};

}  // namespace vqastate
