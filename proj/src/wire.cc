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

#include "dapfl/wire.h"

#include <algorithm>
#include <string>

#include "dapfl/errors.h"

namespace dapfl::wire {

const char* ToString(MessageType type) {
  switch (type) {
    case MessageType::kGlobalModel:
      return "global-model";
    case MessageType::kClientUpload:
      return "client-upload";
    case MessageType::kAggregateBundle:
      return "aggregate-bundle";
    case MessageType::kReport:
      return "report";
  }
  return "unknown";
}

Bytes Frame(const Envelope& envelope) {
  if (envelope.payload.size() > kMaxPayloadBytes) {
    throw FormatError("payload exceeds the frame limit");
  }
  ByteWriter w;
  w.Raw(kMagic);
  w.U8(kVersion);
  w.U8(static_cast<std::uint8_t>(envelope.type));
  w.U32(envelope.round);
  w.U32(envelope.sender);
  w.Blob(envelope.payload);
  return w.Take();
}

Header ParseHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw TruncatedError("frame header truncated");
  ByteReader r(bytes.first(kHeaderBytes));
  auto magic = r.Raw(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw BadMagicError("bad frame magic");
  }
  std::uint8_t version = r.U8();
  if (version != kVersion) {
    throw UnsupportedVersionError("unsupported frame version " + std::to_string(version));
  }
  std::uint8_t type = r.U8();
  if (type < 1 || type > 4) {
    throw UnknownMessageTypeError("unknown message type " + std::to_string(type));
  }
  Header h;
  h.type = static_cast<MessageType>(type);
  h.round = r.U32();
  h.sender = r.U32();
  h.length = r.U32();
  if (h.length > kMaxPayloadBytes) throw FormatError("declared payload too large");
  return h;
}

Envelope Unframe(std::span<const std::uint8_t> bytes) {
  Header h = ParseHeader(bytes);
  std::size_t available = bytes.size() - kHeaderBytes;
  if (available < h.length) throw TruncatedError("frame payload truncated");
  if (available > h.length) throw FormatError("trailing bytes after frame");
  auto payload = bytes.subspan(kHeaderBytes);
  return Envelope{h.type, h.round, h.sender, Bytes(payload.begin(), payload.end())};
}

}  // namespace dapfl::wire
