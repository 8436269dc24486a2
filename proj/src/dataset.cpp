#include "rdrn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "rdrn/error.hpp"
#include "rdrn/image.hpp"

namespace rdrn {

namespace fs = std::filesystem;

std::vector<fs::path> list_hr_images(const fs::path& root) {
  fs::path dir = fs::is_directory(root / "HR") ? root / "HR" : root;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + root.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) {
      return static_cast<char>(std::tolower(ch));
    });
    if (ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path lr_cache_dir(const fs::path& root, const DegradationSpec& spec) {
  return root / ("LR_" + to_string(spec.kind) + "_x" + std::to_string(spec.scale));
}

DegradationSpec spec_for_image(const DegradationSpec& spec, std::size_t index) {
  DegradationSpec s = spec;
  s.rng_seed = spec.rng_seed * 0x9E3779B97F4A7C15ULL + index;
  return s;
}

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Dataset load_dataset(const fs::path& root, const DegradationSpec& spec, bool use_cache) {
  spec.validate();
  const auto files = list_hr_images(root);
  const fs::path cache = lr_cache_dir(root, spec);
  const fs::path stamp = cache / ".spec";
  bool cache_valid = false;
  if (use_cache) {
    cache_valid = fs::exists(stamp) && read_text(stamp) == spec.hash_hex() + "\n";
    if (!cache_valid) {
      std::error_code ec;
      fs::remove_all(cache, ec);
      fs::create_directories(cache, ec);
      if (ec) throw IoError("cannot create LR cache " + cache.string());
    }
  }

  Dataset ds;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string name = files[i].stem().string();
    try {
      Tensor hr = crop_to_multiple(read_png(files[i]), spec.scale);
      if (hr.h() < spec.scale || hr.w() < spec.scale) {
        throw InputError("image smaller than the scale factor");
      }
      Tensor lr;
      const fs::path cached = cache / (name + ".png");
      if (!use_cache) {
        lr = degrade(hr, spec_for_image(spec, i));
      } else {
        // Always read back from the 16-bit cache so first and later runs
        // see identical inputs.
        if (!cache_valid || !fs::exists(cached)) {
          write_png(cached, degrade(hr, spec_for_image(spec, i)), 16);
        }
        lr = read_png(cached);
      }
      ds.images.push_back({name, std::move(hr), std::move(lr)});
    } catch (const std::exception& e) {
      ds.skipped.push_back({name, e.what()});
    }
  }
  if (use_cache && !cache_valid) {
    std::ofstream(stamp) << spec.hash_hex() << "\n";
  }
  return ds;
}

}  // namespace rdrn
