#pragma once

// Image folders laid out as <root>/HR/*.png. LR inputs are generated from a
// DegradationSpec and cached under <root>/LR_<kind>_x<r>/; the cache is
// regenerated when the spec hash stored beside it differs.

#include <filesystem>
#include <string>
#include <vector>

#include "rdrn/degradation.hpp"
#include "rdrn/tensor.hpp"

namespace rdrn {

struct DatasetImage {
  std::string name;  // file stem
  Tensor hr;         // cropped to a multiple of the scale
  Tensor lr;
};

struct SkippedImage {
  std::string name;
  std::string reason;
};

struct Dataset {
  std::vector<DatasetImage> images;
  std::vector<SkippedImage> skipped;
};

// Sorted list of *.png files under <root>/HR (or <root> when it has no HR/).
std::vector<std::filesystem::path> list_hr_images(const std::filesystem::path& root);

std::filesystem::path lr_cache_dir(const std::filesystem::path& root, const DegradationSpec& spec);

// Undecodable images are reported in `skipped` rather than thrown.
// With use_cache = false no files are written.
Dataset load_dataset(const std::filesystem::path& root, const DegradationSpec& spec,
                     bool use_cache = true);

// Per-image noise seed so DN noise differs between images yet stays
// reproducible.
DegradationSpec spec_for_image(const DegradationSpec& spec, std::size_t index);

}  // namespace rdrn
