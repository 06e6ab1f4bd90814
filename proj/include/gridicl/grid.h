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

#ifndef GRIDICL_GRID_H_
#define GRIDICL_GRID_H_

#include <array>
#include <string_view>
#include <vector>

#include "gridicl/image.h"

namespace gridicl {

enum class Role { kA = 0, kAPrime = 1, kB = 2, kBPrime = 3 };
enum class Quadrant { kTopLeft = 0, kTopRight = 1, kBottomLeft = 2, kBottomRight = 3 };

inline constexpr std::array<Role, 4> kAllRoles = {Role::kA, Role::kAPrime, Role::kB,
                                                  Role::kBPrime};
inline constexpr std::array<Quadrant, 4> kAllQuadrants = {
    Quadrant::kTopLeft, Quadrant::kTopRight, Quadrant::kBottomLeft, Quadrant::kBottomRight};

std::string_view role_name(Role role);
std::string_view quadrant_name(Quadrant quadrant);

// Which quadrant holds which role. B' is always bottom-right.
class CellLayout {
 public:
  // A -> TL, A' -> TR, B -> BL.
  static CellLayout standard();
  // A' and B trade places (payloads and labels move together).
  static CellLayout swapped();
  // Throws kInvalidLayout unless the assignment is a bijection with B' at BR.
  static CellLayout from_assignment(const std::array<Quadrant, 4>& role_to_quadrant);

  Quadrant quadrant_of(Role role) const { return assignment_[static_cast<int>(role)]; }
  Role role_at(Quadrant quadrant) const;
  bool is_swapped() const { return quadrant_of(Role::kAPrime) == Quadrant::kBottomLeft; }

  bool operator==(const CellLayout&) const = default;

 private:
  explicit CellLayout(const std::array<Quadrant, 4>& a) : assignment_(a) {}
  std::array<Quadrant, 4> assignment_;
};

struct ImageGrid {
  Image grid_image;    // 2H x 2W RGB, BR quadrant black
  Image pasted_image;  // grid_image with the query in BR
  Image mask;          // 2H x 2W single channel, 1 on BR
  Size cell_size;
  CellLayout layout = CellLayout::standard();
};

// Row-major flattened positions of each quadrant of an (h, w) feature map.
class RegionIndexMap {
 public:
  Size resolution() const { return resolution_; }
  const std::vector<int>& quadrant(Quadrant q) const { return sets_[static_cast<int>(q)]; }
  const std::vector<int>& role(Role r) const { return quadrant(layout_.quadrant_of(r)); }
  const CellLayout& layout() const { return layout_; }

 private:
  friend RegionIndexMap region_indices(int h, int w, const CellLayout& layout);
  Size resolution_;
  CellLayout layout_ = CellLayout::standard();
  std::array<std::vector<int>, 4> sets_;
};

// Throws kInvalidResolution for odd or < 2 dimensions.
RegionIndexMap region_indices(int h, int w, const CellLayout& layout = CellLayout::standard());

Image make_mask(Size cell_size);

ImageGrid compose_grid(const Image& a, const Image& a_prime, const Image& b,
                       const CellLayout& layout, Size cell_size);

// Places `b` (resized to the cell) into the BR quadrant of pasted_image.
ImageGrid paste_query(const ImageGrid& grid, const Image& b);

// The image for `role` cropped out of a full grid raster.
Image cell(const Image& grid_raster, Size cell_size, Quadrant quadrant);

}  // namespace gridicl

#endif  // GRIDICL_GRID_H_
