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

#ifndef GRIDICL_ANNOTATE_H_
#define GRIDICL_ANNOTATE_H_

#include <array>
#include <string>
#include <vector>

#include "gridicl/grid.h"
#include "gridicl/image.h"

namespace gridicl {

using Color = std::array<float, 3>;

struct ArrowSpec {
  Quadrant from = Quadrant::kTopLeft;
  Quadrant to = Quadrant::kTopRight;
};

// Letter marks and arrows drawn on top of the grid before it is shown to the
// vision-language model.
struct AnnotationSpec {
  // Indexed by Role. An empty label is not drawn.
  std::array<std::string, 4> labels = {"A", "A'", "B", "B'"};
  int label_x = 8;
  int label_y = 8;
  // Pixels per font dot; 0 picks max(1, cell_height / 85).
  int font_scale = 0;
  Color text_color = {1.0f, 1.0f, 1.0f};
  Color box_color = {0.0f, 0.0f, 0.0f};
  int box_padding = 2;
  std::vector<ArrowSpec> arrows = {{Quadrant::kTopLeft, Quadrant::kTopRight},
                                   {Quadrant::kBottomLeft, Quadrant::kBottomRight}};
  Color arrow_color = {1.0f, 0.15f, 0.15f};
  // 0 picks max(2, cell_height / 64).
  int stroke_width = 0;

  // No labels and no arrows: annotate_grid returns the grid unchanged.
  static AnnotationSpec none();
};

// Copy of grid.grid_image with each role's label at (label_x, label_y)
// inside the role's cell and horizontal arrows centred on the boundary
// between paired cells. Throws kAnnotation for characters the embedded font
// lacks.
Image annotate_grid(const ImageGrid& grid, const AnnotationSpec& spec = {});

// Renders `text` with its top-left corner at (x, y); clipped to the image.
void draw_text(const std::string& text, int x, int y, int scale, const Color& color, Image* image);
int text_width(const std::string& text, int scale);

}  // namespace gridicl

#endif  // GRIDICL_ANNOTATE_H_
