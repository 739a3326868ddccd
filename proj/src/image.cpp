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

#include "vqastate/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <jpeglib.h>
#include <png.h>
#include <sodium.h>

#include "vqastate/random.hpp"

namespace vqastate {

namespace {

constexpr std::uint64_t kAugmentDomain = 0x52474253686966ULL;  // "RGBShif"

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

std::vector<float> to_unit(const std::vector<std::uint8_t>& raw) {
  std::vector<float> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return out;
}

ImageVariant decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DecodeError(std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("png: " + msg);
  }
  return ImageVariant(image.width, image.height, to_unit(raw));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Kept free of objects with non-trivial destructors because of setjmp.
bool decode_jpeg_raw(std::span<const std::uint8_t> bytes, std::uint8_t** out,
                     unsigned* width, unsigned* height, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.message[0] = '\0';
  *out = nullptr;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    std::free(*out);
    *out = nullptr;
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *width = cinfo.output_width;
  *height = cinfo.output_height;
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  *out = static_cast<std::uint8_t*>(std::malloc(stride * cinfo.output_height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = *out + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

ImageVariant decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::uint8_t* data = nullptr;
  unsigned width = 0;
  unsigned height = 0;
  char message[JMSG_LENGTH_MAX];
  if (!decode_jpeg_raw(bytes, &data, &width, &height, message))
    throw DecodeError(std::string("jpeg: ") + message);
  std::vector<std::uint8_t> raw(data, data + std::size_t{width} * height * 3);
  std::free(data);
  return ImageVariant(width, height, to_unit(raw));
}

bool looks_like_matrix_text(std::span<const std::uint8_t> b) {
  for (auto c : b) {
    if (std::isspace(c)) continue;
    return std::isdigit(c);
  }
  return false;
}

}  // namespace

void AugmentConfig::validate() const {
  std::vector<FieldIssue> issues;
  if (n_variants < 1) issues.push_back({"n_variants", "must be at least 1"});
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude))
    issues.push_back({"magnitude", "must be a finite non-negative number"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

ImageVariant decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError("empty image payload");
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  if (looks_like_matrix_text(bytes))
    return parse_matrix_text(std::string_view(
        reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  throw DecodeError("unrecognized image format (expected PNG, JPEG or matrix text)");
}

ImageVariant decode_image(std::string_view bytes) {
  return decode_image(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

ImageVariant load_image_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const ImageVariant& img) {
  std::vector<std::uint8_t> raw(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), raw.begin(),
                 [](float v) {
                   return static_cast<std::uint8_t>(std::lround(v * 255.0f));
                 });
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0,
                                 nullptr))
    throw DecodeError(std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0,
                                 nullptr))
    throw DecodeError(std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

std::string to_matrix_text(const ImageVariant& img) {
  std::ostringstream os;
  os.precision(9);
  os << img.width() << ' ' << img.height() << '\n';
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        if (c + ch > 0) os << ' ';
        os << img.at(r, c, ch);
      }
    }
    os << '\n';
  }
  return os.str();
}

ImageVariant parse_matrix_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  long long width = 0;
  long long height = 0;
  if (!(in >> width >> height) || width <= 0 || height <= 0)
    throw DecodeError("matrix text: bad dimensions header");
  const auto count = static_cast<std::size_t>(width * height * 3);
  std::vector<float> pixels;
  pixels.reserve(count);
  double v = 0;
  while (pixels.size() < count && in >> v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw DecodeError("matrix text: intensity outside [0, 1]");
    pixels.push_back(static_cast<float>(v));
  }
  if (pixels.size() != count)
    throw DecodeError("matrix text: expected " + std::to_string(count) +
                      " intensities, got " + std::to_string(pixels.size()));
  std::string rest;
  if (in >> rest) throw DecodeError("matrix text: trailing data");
  return ImageVariant(static_cast<std::size_t>(width),
                      static_cast<std::size_t>(height), std::move(pixels));
}

std::vector<ImageVariant> augment(const ImageVariant& base,
                                  const AugmentConfig& cfg) {
  cfg.validate();
  if (base.variant_index() != 0)
    throw ValidationError("base", "augmentation starts from variant 0");

  std::vector<ImageVariant> out;
  out.reserve(cfg.n_variants);
  out.push_back(base);

  const auto n_values = base.pixels().size();
  for (std::size_t v = 1; v < cfg.n_variants; ++v) {
    const CounterStream stream(derive_key(cfg.seed ^ kAugmentDomain, v));
    std::vector<float> pixels(base.pixels());
    ChannelShift shift{0, 0, 0};
    if (!cfg.per_pixel) {
      for (std::size_t c = 0; c < 3; ++c) shift[c] = stream.symmetric(c, cfg.magnitude);
      for (std::size_t i = 0; i < n_values; ++i) {
        const double shifted = static_cast<double>(pixels[i]) + shift[i % 3];
        pixels[i] = static_cast<float>(std::clamp(shifted, 0.0, 1.0));
      }
    } else {
      for (std::size_t i = 0; i < n_values; ++i) {
        const double shifted = static_cast<double>(pixels[i]) +
                               stream.symmetric(i, cfg.magnitude);
        pixels[i] = static_cast<float>(std::clamp(shifted, 0.0, 1.0));
      }
    }
    out.emplace_back(base.width(), base.height(), std::move(pixels), v, shift);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        " \t\r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    throw DecodeError("invalid base64 payload");
  out.resize(len);
  return out;
}

}  // namespace vqastate
