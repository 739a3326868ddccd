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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqastate/types.hpp"

namespace vqastate {

// Noise-augmentation settings: n_variants images, variant 0 clean, the rest
// shifted by values drawn uniformly from [-magnitude, magnitude].
struct AugmentConfig {
  std::size_t n_variants = 5;
  double magnitude = 0.1;
  std::uint64_t seed = 0;
  bool per_pixel = false;

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

/// Decodes PNG, JPEG, or the plain-text matrix format into variant 0.
/// Throws DecodeError describing what went wrong.
ImageVariant decode_image(std::span<const std::uint8_t> bytes);
ImageVariant decode_image(std::string_view bytes);

ImageVariant load_image_file(const std::string& path);

// 8-bit RGB PNG; intensities are rounded to the nearest level.
std::vector<std::uint8_t> encode_png(const ImageVariant& image);

// "width height" on the first line, then one line per row holding
// width R G B triples.
std::string to_matrix_text(const ImageVariant& image);
ImageVariant parse_matrix_text(std::string_view text);

std::vector<ImageVariant> augment(const ImageVariant& base,
                                  const AugmentConfig& cfg);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace vqastate
