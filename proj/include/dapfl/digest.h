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

#ifndef DAPFL_DIGEST_H_
#define DAPFL_DIGEST_H_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace dapfl {

using Sha256Digest = std::array<std::uint8_t, 32>;

// SHA-256 over the concatenation of the given byte ranges.
Sha256Digest Sha256(std::initializer_list<std::span<const std::uint8_t>> parts);

}  // namespace dapfl

#endif  // DAPFL_DIGEST_H_
