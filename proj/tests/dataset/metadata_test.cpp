#include "gns/dataset/metadata.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "gns/errors.hpp"

namespace gns {
namespace {

// Dataset descriptor exactly as published for the WaterDropSample set.
constexpr const char* kPublishedListing = R"({
  "bounds": [[0.1, 0.9], [0.1, 0.9]],
  "sequence_length": 320,
  "default_connectivity_radius": 0.015,
  "dim": 2,
  "dt": 0.0025,
  "vel_mean": [5.123277536458455e-06, -0.0009965205918140803],
  "vel_std": [0.0021978993231675805, 0.0026653552458701774],
  "acc_mean": [5.237611158734309e-07, 2.3633027988858656e-07],
  "acc_std": [0.0002582944917306106, 0.00029554531667679154]
})";

TEST(MetadataTest, ParsesPublishedListing) {
  const Metadata m = parse_metadata(kPublishedListing);
  EXPECT_EQ(m.dim, 2u);
  EXPECT_EQ(m.dt, 0.0025);
  EXPECT_EQ(m.default_connectivity_radius, 0.015);
  EXPECT_EQ(m.sequence_length, 320u);
  ASSERT_EQ(m.bounds.size(), 2u);
  EXPECT_EQ(m.bounds[0], std::make_pair(0.1, 0.9));
  EXPECT_EQ(m.bounds[1], std::make_pair(0.1, 0.9));
}

TEST(MetadataTest, StatisticsKeepFullPrecision) {
  const Metadata m = parse_metadata(kPublishedListing);
  EXPECT_EQ(m.stats.vel_mean[0], 5.123277536458455e-06);
  EXPECT_EQ(m.stats.vel_mean[1], -0.0009965205918140803);
  EXPECT_EQ(m.stats.vel_std[0], 0.0021978993231675805);
  EXPECT_EQ(m.stats.vel_std[1], 0.0026653552458701774);
  EXPECT_EQ(m.stats.acc_mean[0], 5.237611158734309e-07);
  EXPECT_EQ(m.stats.acc_mean[1], 2.3633027988858656e-07);
  EXPECT_EQ(m.stats.acc_std[0], 0.0002582944917306106);
  EXPECT_EQ(m.stats.acc_std[1], 0.00029554531667679154);
}

TEST(MetadataTest, MissingKeyIsNamed) {
  auto doc = nlohmann::json::parse(kPublishedListing);
  doc.erase("dim");
  try {
    parse_metadata(doc.dump());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("\"dim\""), std::string::npos) << e.what();
  }
}

TEST(MetadataTest, RejectsNonPositiveStd) {
  auto doc = nlohmann::json::parse(kPublishedListing);
  doc["acc_std"] = {0.1, 0.0};
  EXPECT_THROW(parse_metadata(doc.dump()), ParseError);
}

TEST(MetadataTest, RejectsMalformedJson) {
  EXPECT_THROW(parse_metadata("{\"dim\": 2,"), ParseError);
  EXPECT_THROW(parse_metadata("[1, 2]"), ParseError);
}

TEST(MetadataTest, RejectsBadShapes) {
  auto doc = nlohmann::json::parse(kPublishedListing);
  doc["vel_mean"] = {0.0};
  EXPECT_THROW(parse_metadata(doc.dump()), ParseError);
  doc = nlohmann::json::parse(kPublishedListing);
  doc["bounds"] = {{0.9, 0.1}, {0.1, 0.9}};
  EXPECT_THROW(parse_metadata(doc.dump()), ParseError);
  doc = nlohmann::json::parse(kPublishedListing);
  doc["dim"] = 4;
  EXPECT_THROW(parse_metadata(doc.dump()), ParseError);
}

TEST(MetadataTest, UnknownKeysSurviveRoundTrip) {
  auto doc = nlohmann::json::parse(kPublishedListing);
  doc["material"] = "water";
  const Metadata m = parse_metadata(doc.dump());
  EXPECT_EQ(m.extra.at("material"), "water");

  const auto path = std::filesystem::temp_directory_path() / "gns_metadata_test.json";
  write_metadata(path, m);
  const Metadata back = read_metadata(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.extra.at("material"), "water");
  EXPECT_EQ(back.stats.acc_std, m.stats.acc_std);
  EXPECT_EQ(back.bounds, m.bounds);
}

}  // namespace
}  // namespace gns
