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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "vqastate/backend.hpp"
#include "vqastate/image.hpp"
#include "vqastate/types.hpp"

namespace vqastate::test {

inline StateSpec door_spec() {
  StateSpec::Fields f;
  f.id = "door";
  f.concept_wordings = {"door"};
  f.positive_expression = "open";
  f.negative_expression = "closed";
  return StateSpec(f);
}

inline ImageVariant solid(std::size_t w, std::size_t h, float r, float g,
                          float b) {
  std::vector<float> px;
  px.reserve(w * h * 3);
  for (std::size_t i = 0; i < w * h; ++i) {
    px.push_back(r);
    px.push_back(g);
    px.push_back(b);
  }
  return ImageVariant(w, h, std::move(px));
}

inline ImageVariant noise_image(std::size_t w, std::size_t h,
                                std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> px(w * h * 3);
  for (auto& v : px) v = u(gen);
  return ImageVariant(w, h, std::move(px));
}

inline std::vector<std::uint8_t> png_bytes(const ImageVariant& img) {
  return encode_png(img);
}

// Answers through a plain function; counts calls.
class FnBackend final : public VqaBackend {
 public:
  using Fn = std::function<std::string(const BackendRequest&)>;
  explicit FnBackend(Fn fn, std::size_t in_flight = 4)
      : fn_(std::move(fn)), in_flight_(in_flight) {}

  std::string ask(const BackendRequest& r) override {
    ++calls;
    return fn_(r);
  }
  std::size_t max_in_flight() const override { return in_flight_; }

  std::atomic<std::size_t> calls{0};

 private:
  Fn fn_;
  std::size_t in_flight_;
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vqastate-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }
  std::string write(const std::string& name,
                    const std::vector<std::uint8_t>& bytes) const {
    std::ofstream(file(name), std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    return file(name);
  }
  const std::filesystem::path& path() const { return path_; }

  static std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

 private:
  std::filesystem::path path_;
};

inline std::string data_path(const std::string& rel) {
  return std::string(VQASTATE_DATA_DIR) + "/" + rel;
}

// One rule per accuracy cell. p_<image state>_<question polarity> is the
// probability of the correct answer; the rest goes to the wrong one.
inline MockRuleSet cell_rules(const std::string& spec_id, double p_pos_pos,
                              double p_pos_neg, double p_neg_pos,
                              double p_neg_neg, const std::string& pos_expr,
                              const std::string& neg_expr) {
  auto rule = [&](const std::string& truth, const std::string& expr,
                  const std::string& right, const std::string& wrong,
                  double p) {
    MockRule r;
    r.image_label = "*" + spec_id + "=" + truth + "*";
    r.question_pattern = "* " + expr + "?";
    r.distribution = {{right, p}, {wrong, 1.0 - p}};
    return r;
  };
  MockRuleSet s;
  s.rules = {rule("positive", pos_expr, "yes", "no", p_pos_pos),
             rule("positive", neg_expr, "no", "yes", p_pos_neg),
             rule("negative", pos_expr, "no", "yes", p_neg_pos),
             rule("negative", neg_expr, "yes", "no", p_neg_neg)};
  return s;
}

}  // namespace vqastate::test
