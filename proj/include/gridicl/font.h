// Copyright 2026 The gridicl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRIDICL_FONT_H_
#define GRIDICL_FONT_H_

#include <array>
#include <cstdint>

namespace gridicl {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

// One byte per row, bit 4 is the leftmost column.
using Glyph = std::array<uint8_t, kGlyphHeight>;

// Embedded 5x7 bitmap for A-Z (case-folded), 0-9, space and ' - . : / > ?
// Returns nullptr for characters the font does not cover.
const Glyph* find_glyph(char c);

}  // namespace gridicl

#endif  // GRIDICL_FONT_H_
