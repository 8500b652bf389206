#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cpdm/metrics.hpp"
#include "cpdm/reports.hpp"
#include "cpdm/rng.hpp"
#include "cpdm/speckle_model.hpp"

using namespace cpdm;

namespace {

// Image whose values are multiples of 1/256, so sums and shifts are exact.
Image dyadic_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& v : img) v = rng.uniform_int(0, 200) / 256.0;
  return img;
}

RoiSpec simple_roi() {
  RoiSpec roi;
  roi.signal_regions = {{0, 0, 8, 8}, {8, 8, 8, 8}};
  roi.background_region = {16, 0, 16, 16};
  roi.homogeneous_region = {16, 16, 16, 16};
  return roi;
}

}  // namespace

TEST(Cnr, TenDecibelExample) {
  Image img(16, 8, 0.0);
  RoiSpec roi;
  roi.signal_regions = {{0, 0, 8, 8}};
  roi.background_region = {8, 0, 8, 8};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      img(x, y) = 1.0;
      img(8 + x, y) = (x + y) % 2 == 0 ? 0.1 : -0.1;
    }
  }
  EXPECT_NEAR(cnr(img, roi), 10.0, 1e-12);
}

TEST(Cnr, IndistinguishableRegionsAreVeryNegative) {
  Image img(16, 8, 0.0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 16; ++x) img(x, y) = (x + y) % 2 == 0 ? 0.6 : 0.4;
  RoiSpec roi;
  roi.signal_regions = {{0, 0, 8, 8}};
  roi.background_region = {8, 0, 8, 8};
  EXPECT_EQ(cnr(img, roi), -std::numeric_limits<double>::infinity());
  img(0, 0) += 1e-6;
  EXPECT_LT(cnr(img, roi), -40.0);
}

TEST(Cnr, ConstantRegionsAreAnError) {
  const Image img(16, 8, 0.3);
  RoiSpec roi;
  roi.signal_regions = {{0, 0, 8, 8}};
  roi.background_region = {8, 0, 8, 8};
  EXPECT_THROW(cnr(img, roi), DomainError);
  roi.signal_regions.clear();
  EXPECT_THROW(cnr(img, roi), ShapeError);
}

TEST(Cnr, ShiftInvariant) {
  Image img = dyadic_image(32, 32, 1);
  const RoiSpec roi = simple_roi();
  const double before = cnr(img, roi);
  for (auto& v : img) v += 0.25;
  EXPECT_EQ(cnr(img, roi), before);

  Image general(32, 32);
  Rng rng(2);
  for (auto& v : general) v = rng.uniform();
  const double g0 = cnr(general, roi);
  for (auto& v : general) v += 0.137;
  EXPECT_NEAR(cnr(general, roi), g0, 1e-12);
}

TEST(Enl, SpeckledConstantRegionEstimatesLooks) {
  const Image noisy = apply_speckle(Image(64, 64, 0.5), 4.0, 3);
  RoiSpec roi;
  roi.homogeneous_region = {0, 0, 64, 64};
  EXPECT_NEAR(enl(noisy, roi), 4.0, 0.6);
}

TEST(Enl, ConstantRegionIsInfinite) {
  RoiSpec roi;
  roi.homogeneous_region = {0, 0, 4, 4};
  EXPECT_TRUE(std::isinf(enl(Image(4, 4, 0.2), roi)));
}

TEST(Enl, ScaleInvariant) {
  Image img = dyadic_image(32, 32, 4);
  const RoiSpec roi = simple_roi();
  const double before = enl(img, roi);
  for (auto& v : img) v *= 2.0;
  EXPECT_EQ(enl(img, roi), before);
  for (auto& v : img) v *= 0.731;
  EXPECT_NEAR(enl(img, roi), before, 1e-10 * before);
}

TEST(Psnr, Examples) {
  const Image ref(10, 10, 0.5);
  EXPECT_TRUE(std::isinf(psnr(ref, ref)));
  EXPECT_NEAR(psnr(Image(10, 10, 0.6), ref), 20.0, 1e-10);
}

TEST(Psnr, GaussianNoiseGivesTwentyDecibels) {
  Rng rng(5);
  const Image ref(256, 256, 0.5);
  Image noisy = ref;
  for (auto& v : noisy) v += 0.1 * rng.normal();
  EXPECT_NEAR(psnr(noisy, ref), 20.0, 0.1);
  EXPECT_EQ(psnr(noisy, ref), psnr(ref, noisy));
  EXPECT_THROW(psnr(Image(3, 3), Image(3, 4)), ShapeError);
}

TEST(Regions, BoundsChecked) {
  const Image img(10, 10);
  EXPECT_THROW(region_stats(img, {5, 5, 6, 2}), ShapeError);
  EXPECT_THROW(region_stats(img, {0, 0, 0, 2}), ShapeError);
  EXPECT_THROW(region_stats(img, {-1, 0, 2, 2}), ShapeError);
  const auto s = region_stats(Image(2, 1, std::vector<double>{1.0, 3.0}), {0, 0, 2, 1});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.variance, 1.0);
}

TEST(RoiFile, ParseAndFormat) {
  std::istringstream in(
      "# regions\n"
      "signal 1 2 3 4\n"
      "\n"
      "signal 5 6 7 8   # second\n"
      "background 0 0 10 10\n");
  const RoiSpec roi = parse_roi(in);
  ASSERT_EQ(roi.signal_regions.size(), 2u);
  EXPECT_EQ(roi.signal_regions[1], (Rect{5, 6, 7, 8}));
  EXPECT_EQ(roi.homogeneous_region, roi.background_region);
  std::istringstream again(format_roi(roi));
  const RoiSpec back = parse_roi(again);
  EXPECT_EQ(back.signal_regions, roi.signal_regions);
  EXPECT_EQ(back.background_region, roi.background_region);
}

TEST(RoiFile, Rejections) {
  for (const char* text : {"signal 1 2 3\nbackground 0 0 1 1\n", "blob 0 0 1 1\n",
                           "background 0 0 4 4\n", "signal 0 0 1 1\n",
                           "signal 0 0 1 1 9\nbackground 0 0 1 1\n",
                           "signal 0 0 0 1\nbackground 0 0 1 1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_roi(in), DomainError) << text;
  }
}

TEST(Report, KeyValueAndJson) {
  MetricsReport rep{3.5, std::numeric_limits<double>::infinity(), 21.25};
  const std::string text = format_report(rep);
  EXPECT_NE(text.find("cnr_db=3.5\n"), std::string::npos);
  EXPECT_NE(text.find("enl=inf\n"), std::string::npos);
  EXPECT_NE(text.find("enl_infinite=1\n"), std::string::npos);
  EXPECT_NE(text.find("psnr_db=21.25\n"), std::string::npos);
  EXPECT_NE(text.find("cnr_formula="), std::string::npos);
  const auto j = report_to_json(rep);
  EXPECT_EQ(j["enl"], "inf");
  EXPECT_EQ(j["enl_infinite"], true);
  EXPECT_EQ(j["psnr_db"], 21.25);
  EXPECT_EQ(format_report({1.0, 2.0, std::nullopt}).find("psnr"), std::string::npos);
}
