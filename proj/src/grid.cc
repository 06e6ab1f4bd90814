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

#include "gridicl/grid.h"

#include <string>

#include "gridicl/errors.h"

namespace gridicl {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kA: return "A";
    case Role::kAPrime: return "A'";
    case Role::kB: return "B";
    case Role::kBPrime: return "B'";
  }
  return "?";
}

std::string_view quadrant_name(Quadrant quadrant) {
  switch (quadrant) {
    case Quadrant::kTopLeft: return "TL";
    case Quadrant::kTopRight: return "TR";
    case Quadrant::kBottomLeft: return "BL";
    case Quadrant::kBottomRight: return "BR";
  }
  return "?";
}

CellLayout CellLayout::standard() {
  return CellLayout({Quadrant::kTopLeft, Quadrant::kTopRight, Quadrant::kBottomLeft,
                     Quadrant::kBottomRight});
}

CellLayout CellLayout::swapped() {
  return CellLayout({Quadrant::kTopLeft, Quadrant::kBottomLeft, Quadrant::kTopRight,
                     Quadrant::kBottomRight});
}

CellLayout CellLayout::from_assignment(const std::array<Quadrant, 4>& role_to_quadrant) {
  std::array<bool, 4> seen{};
  for (Quadrant q : role_to_quadrant) {
    const int i = static_cast<int>(q);
    if (i < 0 || i > 3 || seen[i]) {
      throw Error(ErrorKind::kInvalidLayout, "role assignment is not a bijection");
    }
    seen[i] = true;
  }
  if (role_to_quadrant[static_cast<int>(Role::kBPrime)] != Quadrant::kBottomRight) {
    throw Error(ErrorKind::kInvalidLayout, "B' must occupy the bottom-right cell");
  }
  return CellLayout(role_to_quadrant);
}

Role CellLayout::role_at(Quadrant quadrant) const {
  for (Role r : kAllRoles) {
    if (quadrant_of(r) == quadrant) return r;
  }
  throw Error(ErrorKind::kInvalidLayout, "quadrant without role");
}

RegionIndexMap region_indices(int h, int w, const CellLayout& layout) {
  if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorKind::kInvalidResolution,
                "attention map " + std::to_string(h) + "x" + std::to_string(w) +
                    " cannot be split into quadrants");
  }
  RegionIndexMap map;
  map.resolution_ = {h, w};
  map.layout_ = layout;
  const size_t quarter = static_cast<size_t>(h) * w / 4;
  for (auto& s : map.sets_) s.reserve(quarter);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int q = (r >= h / 2 ? 2 : 0) + (c >= w / 2 ? 1 : 0);
      map.sets_[q].push_back(r * w + c);
    }
  }
  return map;
}

Image make_mask(Size cell_size) {
  Image mask(2 * cell_size.width, 2 * cell_size.height, 1);
  for (int y = cell_size.height; y < 2 * cell_size.height; ++y) {
    for (int x = cell_size.width; x < 2 * cell_size.width; ++x) mask.at(x, y, 0) = 1.0f;
  }
  return mask;
}

namespace {

void origin_of(Quadrant q, Size cell, int* x0, int* y0) {
  const int i = static_cast<int>(q);
  *x0 = (i % 2) * cell.width;
  *y0 = (i / 2) * cell.height;
}

Image fit_to_cell(const Image& img, Size cell) {
  if (img.empty()) throw Error(ErrorKind::kInvalidInput, "zero-sized input image");
  return resize_bilinear(to_rgb(img), cell);
}

}  // namespace

ImageGrid compose_grid(const Image& a, const Image& a_prime, const Image& b,
                       const CellLayout& layout, Size cell_size) {
  if (cell_size.height <= 0 || cell_size.width <= 0 || cell_size.height % 2 != 0 ||
      cell_size.width % 2 != 0) {
    throw Error(ErrorKind::kInvalidInput, "cell size must be positive and even");
  }
  if (layout.quadrant_of(Role::kBPrime) != Quadrant::kBottomRight) {
    throw Error(ErrorKind::kInvalidLayout, "B' must occupy the bottom-right cell");
  }
  const std::array<const Image*, 3> inputs = {&a, &a_prime, &b};
  ImageGrid grid;
  grid.cell_size = cell_size;
  grid.layout = layout;
  grid.grid_image = Image(2 * cell_size.width, 2 * cell_size.height, 3);
  Image query;
  for (Role role : {Role::kA, Role::kAPrime, Role::kB}) {
    const Image fitted = fit_to_cell(*inputs[static_cast<int>(role)], cell_size);
    const Quadrant q = layout.quadrant_of(role);
    int x0 = 0;
    int y0 = 0;
    origin_of(q, cell_size, &x0, &y0);
    paste(fitted, x0, y0, &grid.grid_image);
    if (q == Quadrant::kBottomLeft) query = fitted;
  }
  grid.mask = make_mask(cell_size);
  grid.pasted_image = grid.grid_image;
  return paste_query(grid, query);
}

ImageGrid paste_query(const ImageGrid& grid, const Image& b) {
  ImageGrid out = grid;
  const Image fitted = fit_to_cell(b, grid.cell_size);
  paste(fitted, grid.cell_size.width, grid.cell_size.height, &out.pasted_image);
  return out;
}

Image cell(const Image& grid_raster, Size cell_size, Quadrant quadrant) {
  int x0 = 0;
  int y0 = 0;
  origin_of(quadrant, cell_size, &x0, &y0);
  return crop(grid_raster, x0, y0, cell_size.width, cell_size.height);
}

}  // namespace gridicl
