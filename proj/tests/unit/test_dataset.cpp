#include <filesystem>
#include <fstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "doctest.h"
#include "rdrn/dataset.hpp"
#include "rdrn/image.hpp"

using namespace rdrn;
namespace fs = std::filesystem;

TEST_CASE("PNG round trip at 8 and 16 bits") {
  const fs::path dir = fs::temp_directory_path() / "rdrn_png_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Tensor img = fixtures::test_card(13, 9);
  write_png(dir / "a8.png", img, 8);
  write_png(dir / "a16.png", img, 16);
  const Tensor a8 = read_png(dir / "a8.png"), a16 = read_png(dir / "a16.png");
  CHECK(a8.shape() == img.shape());
  CHECK(oracle::max_abs_diff(a8, quantize8(img)) == 0.0);
  CHECK(oracle::max_abs_diff(a16, img) < 1e-5);
  CHECK_THROWS(read_png(dir / "missing.png"));
  fs::remove_all(dir);
}

TEST_CASE("dataset folder with cached LR images") {
  const fs::path root = fs::temp_directory_path() / "rdrn_dataset_test";
  fs::remove_all(root);
  fs::create_directories(root / "HR");
  write_png(root / "HR" / "b.png", fixtures::test_card(26, 30), 16);
  write_png(root / "HR" / "a.png", fixtures::test_card(24, 24, 2), 16);
  std::ofstream(root / "HR" / "broken.png") << "not a png";

  DegradationSpec spec;
  spec.scale = 4;
  const Dataset first = load_dataset(root, spec);
  REQUIRE(first.images.size() == 2);
  CHECK(first.images[0].name == "a");
  CHECK(first.images[1].hr.shape() == Shape{1, 3, 24, 28});
  CHECK(first.images[1].lr.shape() == Shape{1, 3, 6, 7});
  REQUIRE(first.skipped.size() == 1);
  CHECK(first.skipped[0].name == "broken");
  CHECK(fs::exists(lr_cache_dir(root, spec) / "a.png"));
  CHECK(fs::exists(lr_cache_dir(root, spec) / ".spec"));

  const Dataset second = load_dataset(root, spec);
  CHECK(oracle::max_abs_diff(first.images[1].lr, second.images[1].lr) == 0.0);
  const Dataset uncached = load_dataset(root, spec, false);
  CHECK(oracle::max_abs_diff(uncached.images[1].lr, first.images[1].lr) < 1e-5);

  DegradationSpec bd = DegradationSpec::bd_default(4);
  const Dataset blurred = load_dataset(root, bd);
  CHECK(lr_cache_dir(root, bd) != lr_cache_dir(root, spec));
  CHECK(oracle::max_abs_diff(blurred.images[1].lr, first.images[1].lr) > 1e-3);
  fs::remove_all(root);
}
