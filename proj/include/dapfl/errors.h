// Copyright 2026 The dapfl Authors.
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

#ifndef DAPFL_ERRORS_H_
#define DAPFL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dapfl {

// Base of every error thrown by the library. Subclasses name the failure
// category so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument is outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Key material is inconsistent, mismatched, or cannot be generated.
class KeyError : public Error {
 public:
  using Error::Error;
};

// A fixed-point value does not fit in the plaintext space.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Bytes on the wire or on disk do not parse.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Truncated input: a declared length runs past the end of the buffer.
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Well-formed bytes that violate the protocol (bad magic, version, type).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class UnsupportedVersionError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class UnknownMessageTypeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// A signature does not verify, or a ciphertext does not decrypt under the
// expected key.
class VerificationError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// No client survived verification in a round.
class RoundError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Local training produced non-finite values.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Dataset contents are inconsistent (label range, row counts).
class DataError : public Error {
 public:
  using Error::Error;
};

// Experiment configuration is invalid or incomplete.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Message delivery failed (unknown endpoint, socket failure).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace dapfl

#endif  // DAPFL_ERRORS_H_
