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

#include "gridicl/annotate.h"

#include <algorithm>

#include "gridicl/errors.h"
#include "gridicl/font.h"

namespace gridicl {

namespace {

void fill_rect(int x0, int y0, int x1, int y1, const Color& color, Image* image) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, image->width());
  y1 = std::min(y1, image->height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < 3; ++c) image->at(x, y, c) = color[c];
    }
  }
}

// Origin of a quadrant's cell in grid pixels.
std::array<int, 2> cell_origin(Quadrant q, Size cell) {
  const int i = static_cast<int>(q);
  return {(i % 2) * cell.width, (i / 2) * cell.height};
}

void draw_arrow(const ArrowSpec& arrow, Size cell, int stroke, const Color& color,
                Image* image) {
  const auto [fx, fy] = cell_origin(arrow.from, cell);
  const auto [tx, ty] = cell_origin(arrow.to, cell);
  if (fy != ty || fx == tx) {
    throw Error(ErrorKind::kAnnotation, "arrows must join horizontally adjacent cells");
  }
  const bool rightward = tx > fx;
  const int boundary = std::max(fx, tx);
  const int mid_y = fy + cell.height / 2;
  const int half_len = std::max(8, cell.width / 8);
  const int head = std::max(3 * stroke, 6);
  const int shaft_from = boundary - half_len;
  const int shaft_to = boundary + half_len;
  const int half_stroke = stroke / 2;
  if (rightward) {
    fill_rect(shaft_from, mid_y - half_stroke, shaft_to - head, mid_y - half_stroke + stroke, color,
              image);
  } else {
    fill_rect(shaft_from + head, mid_y - half_stroke, shaft_to, mid_y - half_stroke + stroke,
              color, image);
  }
  // Filled triangular head, one column at a time.
  for (int k = 0; k < head; ++k) {
    const int half_h = (head - k) / 2 + half_stroke;
    const int x = rightward ? shaft_to - head + k : shaft_from + head - 1 - k;
    fill_rect(x, mid_y - half_h, x + 1, mid_y + half_h + 1, color, image);
  }
}

}  // namespace

AnnotationSpec AnnotationSpec::none() {
  AnnotationSpec spec;
  spec.labels = {"", "", "", ""};
  spec.arrows.clear();
  return spec;
}

int text_width(const std::string& text, int scale) {
  if (text.empty()) return 0;
  return static_cast<int>(text.size()) * (kGlyphWidth + 1) * scale - scale;
}

void draw_text(const std::string& text, int x, int y, int scale, const Color& color,
               Image* image) {
  int pen = x;
  for (char ch : text) {
    const Glyph* glyph = find_glyph(ch);
    if (glyph == nullptr) {
      throw Error(ErrorKind::kAnnotation,
                  std::string("no glyph for character '") + ch + "' in the embedded font");
    }
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (((*glyph)[row] >> (kGlyphWidth - 1 - col)) & 1) {
          fill_rect(pen + col * scale, y + row * scale, pen + (col + 1) * scale,
                    y + (row + 1) * scale, color, image);
        }
      }
    }
    pen += (kGlyphWidth + 1) * scale;
  }
}

Image annotate_grid(const ImageGrid& grid, const AnnotationSpec& spec) {
  Image out = grid.grid_image;
  const Size cell = grid.cell_size;
  const int scale = spec.font_scale > 0 ? spec.font_scale : std::max(1, cell.height / 85);
  const int stroke = spec.stroke_width > 0 ? spec.stroke_width : std::max(2, cell.height / 64);

  for (Role role : kAllRoles) {
    const std::string& label = spec.labels[static_cast<int>(role)];
    if (label.empty()) continue;
    const auto [ox, oy] = cell_origin(grid.layout.quadrant_of(role), cell);
    const int x = ox + spec.label_x;
    const int y = oy + spec.label_y;
    const int w = text_width(label, scale);
    const int h = kGlyphHeight * scale;
    if (spec.label_x + w > cell.width || spec.label_y + h > cell.height) {
      throw Error(ErrorKind::kAnnotation, "label '" + label + "' does not fit inside its cell");
    }
    const int pad = spec.box_padding;
    fill_rect(x - pad, y - pad, x + w + pad, y + h + pad, spec.box_color, &out);
    draw_text(label, x, y, scale, spec.text_color, &out);
  }
  for (const ArrowSpec& arrow : spec.arrows) {
    draw_arrow(arrow, cell, stroke, spec.arrow_color, &out);
  }
  return out;
}

}  // namespace gridicl
