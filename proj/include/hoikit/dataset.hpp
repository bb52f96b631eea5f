// Copyright 2026 The hoikit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoikit/core.hpp"
#include "hoikit/evaluation.hpp"
#include "hoikit/image.hpp"

namespace hoikit {

struct DatasetManifest {
  std::string name;
  Vocabulary vocabulary;
  std::vector<ImageAnnotation> train;
  std::vector<ImageAnnotation> test;
  std::string provenance = "real";  // real | synthetic
  std::optional<std::uint64_t> generator_seed;
  // Published split sizes, kept as metadata only.
  std::map<std::string, int> recorded_split_sizes;

  size_t size() const { return train.size() + test.size(); }
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

class IngestionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class AnnotationFormat { kNative, kHicoJson, kVcocoJson };

AnnotationFormat parse_annotation_format(std::string_view tag);

// Native files hold both splits and their vocabulary. The HICO/V-COCO
// adapters read the common list-of-images layout (file_name, width, height,
// annotations, hoi_annotation) into `split`.
DatasetManifest load_annotations(const std::filesystem::path& path,
                                 AnnotationFormat format = AnnotationFormat::kNative,
                                 std::string_view split = "train");
DatasetManifest parse_native(const std::string& json_text, const std::filesystem::path& base_dir,
                             const std::string& source_name = "<memory>");
std::string to_native_json(const DatasetManifest& manifest,
                           const std::filesystem::path& base_dir = {});
void save_native(const DatasetManifest& manifest, const std::filesystem::path& path);

// Distinct (verb, object) pairs of `train`; rare when seen fewer than
// `rare_threshold` times.
std::vector<HoiCategory> derive_hoi_categories(std::span<const ImageAnnotation> train,
                                               int rare_threshold = 10);

// Pixel corners -> normalized center-size.
BBox normalize_corners(double x1, double y1, double x2, double y2, int width, int height);
// Normalized center-size -> pixel corners, rounded to 1e-6 px.
std::array<double, 4> pixel_corners(const BBox& box, int width, int height);

// Prediction files: [{image_id, human_box, object_box, object_id, verb_id,
// score}] with boxes as pixel corners; ids may be indices or names.
std::vector<ImagePredictions> parse_predictions(const std::string& json_text,
                                                std::span<const ImageAnnotation> annotations,
                                                const Vocabulary& vocab);
std::string predictions_to_json(std::span<const ImagePredictions> preds,
                                std::span<const ImageAnnotation> annotations);

std::string ap_result_to_json(const APResult& result, const Vocabulary& vocab);

std::map<std::string, Image> load_images(std::span<const ImageAnnotation> annotations);

}  // namespace hoikit
