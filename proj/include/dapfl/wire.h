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

// Message envelope shared by every transport.
//
//   offset  size  field
//        0     4  magic "DAPF"
//        4     1  version (1)
//        5     1  message type
//        6     4  round index      (big-endian)
//       10     4  sender id        (big-endian)
//       14     4  payload length   (big-endian)
//       18     *  payload

#ifndef DAPFL_WIRE_H_
#define DAPFL_WIRE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "dapfl/bigint.h"

namespace dapfl::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic = {'D', 'A', 'P', 'F'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 18;
inline constexpr std::uint32_t kMaxPayloadBytes = 1u << 30;

enum class MessageType : std::uint8_t {
  kGlobalModel = 1,
  kClientUpload = 2,
  kAggregateBundle = 3,
  kReport = 4,
};

const char* ToString(MessageType type);

struct Envelope {
  MessageType type = MessageType::kGlobalModel;
  std::uint32_t round = 0;
  std::uint32_t sender = 0;
  Bytes payload;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct Header {
  MessageType type = MessageType::kGlobalModel;
  std::uint32_t round = 0;
  std::uint32_t sender = 0;
  std::uint32_t length = 0;
};

Bytes Frame(const Envelope& envelope);

// Parses the first kHeaderBytes of `bytes`. Throws TruncatedError on a short
// buffer, BadMagicError, UnsupportedVersionError, UnknownMessageTypeError, or
// FormatError for a payload length above kMaxPayloadBytes.
Header ParseHeader(std::span<const std::uint8_t> bytes);

// Parses one complete frame. In addition to the header errors, throws
// TruncatedError if the payload is short and FormatError on trailing bytes.
Envelope Unframe(std::span<const std::uint8_t> bytes);

}  // namespace dapfl::wire

#endif  // DAPFL_WIRE_H_
