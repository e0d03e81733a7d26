#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "phasenet/config.hpp"
#include "phasenet/container.hpp"
#include "phasenet/dataset.hpp"
#include "phasenet/image_io.hpp"
#include "phasenet/synthetic.hpp"
#include "test_support.hpp"

namespace phasenet {
namespace {

TEST(Container, RoundTripsEveryEntryType) {
  Container c;
  c.put("weights", {2, 3}, std::vector<double>{1.5, -0.0, 3e-300, std::nan(""), INFINITY, 1.0 / 3.0});
  c.put("shape", {2}, std::vector<std::int64_t>{-7, 1LL << 40});
  c.put_text("note", "key = value\nü");
  c.put("empty", {0}, std::vector<double>{});
  const auto bytes = c.serialize();
  const Container back = Container::deserialize(bytes);
  EXPECT_EQ(back.serialize(), bytes);
  EXPECT_EQ(back.text("note"), "key = value\nü");
  EXPECT_EQ(back.i64("shape")[1], 1LL << 40);
  EXPECT_TRUE(std::isnan(back.f64("weights")[3]));
  EXPECT_TRUE(std::signbit(back.f64("weights")[1]));
  EXPECT_EQ(back.f64("weights")[5], 1.0 / 3.0);
  EXPECT_EQ(back.at("weights").dims, (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PHNC");
}

TEST(Container, LookupAndConstructionErrors) {
  Container c;
  c.put("a", {1}, std::vector<double>{1.0});
  EXPECT_THROW(c.put("a", {1}, std::vector<double>{2.0}), std::invalid_argument);
  EXPECT_THROW(c.put("b", {2}, std::vector<double>{2.0}), std::invalid_argument);
  EXPECT_THROW(c.at("missing"), std::runtime_error);
  EXPECT_THROW(c.i64("a"), std::runtime_error);
  EXPECT_THROW(c.text("a"), std::runtime_error);
}

TEST(Container, DetectsEveryTruncation) {
  Container c;
  c.put("a", {4}, std::vector<double>{1, 2, 3, 4});
  c.put_text("t", "hello");
  const auto bytes = c.serialize();
  for (std::size_t n = 0; n < bytes.size(); ++n)
    EXPECT_THROW(Container::deserialize({bytes.begin(), bytes.begin() + n}), std::runtime_error) << n;
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(Container::deserialize(extra), std::runtime_error);
}

TEST(Container, FileSaveIsAtomicReplace) {
  testing::ScratchDir dir("container");
  Container a, b;
  a.put("x", {1}, std::vector<double>{1.0});
  b.put("x", {1}, std::vector<double>{2.0});
  a.save(dir / "c.phnc");
  b.save(dir / "c.phnc");
  EXPECT_EQ(Container::load(dir / "c.phnc"), b);
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);  // no temporaries left behind
  EXPECT_THROW(Container::load(dir / "none.phnc"), std::runtime_error);
}

TEST(Png, EightAndSixteenBitRoundTrip) {
  testing::ScratchDir dir("png");
  Image rgb(5, 7, 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) rgb(y, x, c) = ((y * 7 + x) * 3 + c) / 255.0;
  write_png(dir / "rgb8.png", rgb);
  EXPECT_EQ(read_png(dir / "rgb8.png"), rgb);

  const Image gray(testing::random_grid(9, 4, 3));
  write_png(dir / "g16.png", gray, 16);
  const Image back = read_png(dir / "g16.png");
  ASSERT_EQ(back.channels(), 1);
  for (std::size_t i = 0; i < gray.channel(0).size(); ++i)
    EXPECT_NEAR(back.channel(0)[i], gray.channel(0)[i], 0.5 / 65535 + 1e-15);
}

TEST(Png, ClampsAndRejectsBadInput) {
  testing::ScratchDir dir("pngbad");
  Image img(2, 2, 1, 1.7);
  img(0, 0, 0) = -3.0;
  write_png(dir / "c.png", img);
  const Image back = read_png(dir / "c.png");
  EXPECT_EQ(back(0, 0, 0), 0.0);
  EXPECT_EQ(back(1, 1, 0), 1.0);
  EXPECT_THROW(write_png(dir / "x.png", Image(2, 2, 2)), std::invalid_argument);
  EXPECT_THROW(write_png(dir / "x.png", img, 12), std::invalid_argument);
  EXPECT_THROW(read_png(dir / "missing.png"), std::runtime_error);
  std::ofstream(dir / "junk.png") << "not a png";
  EXPECT_THROW(read_png(dir / "junk.png"), std::runtime_error);
}

TEST(Png, TestImagesLoad) {
  const Image cam = read_png(testing::data_path("camera_256.png"));
  EXPECT_EQ(cam.extent(), (Extent{256, 256}));
  EXPECT_EQ(cam.channels(), 1);
  EXPECT_EQ(read_png(testing::data_path("astronaut_256.png")).channels(), 3);
}

TEST(Config, TextRoundTripsExactly) {
  RunConfig c;
  c.set("profile", "desk");
  c.set("learning_rate", "0.00031");
  c.set("phase_weight", "0.1");
  c.set("scale_factor", "1.4142135623730951");
  c.set("batch_sizes", "4, 5,6,7,8");
  c.set("deterministic", "yes");
  c.set("output", "out/dir");
  RunConfig d;
  d.merge_text(c.to_text());
  EXPECT_EQ(d.train, c.train);
  EXPECT_EQ(d.deterministic, true);
  EXPECT_EQ(d.output, "out/dir");
  EXPECT_EQ(d.to_text(), c.to_text());
  EXPECT_EQ(parse_train_config(train_config_text(c.train)), c.train);
}

TEST(Config, ProfileLineAppliesFirst) {
  RunConfig c;
  c.merge_text("# comment\nlevels = 5   # trailing\nprofile = desk\n");
  EXPECT_EQ(c.train.pyramid.levels, 5);
  EXPECT_EQ(c.train.patch, 64);
  EXPECT_TRUE(c.assigned("levels"));
  EXPECT_FALSE(c.assigned("patch"));
}

TEST(Config, ErrorsNameTheLine) {
  RunConfig c;
  try {
    c.merge_text("levels = 4\nbogus = 1\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(c.set("levels", "four"), std::invalid_argument);
  EXPECT_THROW(c.set("levels", "4x"), std::invalid_argument);
  EXPECT_THROW(c.set("flip_vertical", "maybe"), std::invalid_argument);
  EXPECT_THROW(c.set("profile", "huge"), std::invalid_argument);
  EXPECT_THROW(c.merge_text("no equals sign"), std::invalid_argument);
  EXPECT_THROW(c.merge_file("/nonexistent/config.txt"), std::runtime_error);
  c.set("psnr_cap", "0");
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Dataset, SequencesYieldConsecutiveTriplets) {
  std::vector<Image> frames;
  for (int k = 0; k < 5; ++k) frames.emplace_back(4, 4, 1, k / 10.0);
  TripletDataset d;
  d.add_sequence(frames);
  ASSERT_EQ(d.size(), 3u);
  const Triplet t = d.at(2);
  EXPECT_EQ(t.first(0, 0, 0), 0.2);
  EXPECT_EQ(t.middle(0, 0, 0), 0.3);
  EXPECT_EQ(t.last(0, 0, 0), 0.4);
  EXPECT_THROW(d.add_sequence({frames[0], frames[1]}), std::invalid_argument);
}

TEST(Dataset, LoadsDirectoriesOfPngFrames) {
  testing::ScratchDir dir("dataset");
  std::filesystem::create_directories(dir / "a");
  std::filesystem::create_directories(dir / "b");
  for (int k = 0; k < 4; ++k) write_png(dir / ("a/f" + std::to_string(k) + ".png"), Image(6, 8, 3, k / 4.0));
  for (int k = 0; k < 3; ++k) write_png(dir / ("b/" + std::to_string(k) + ".png"), Image(6, 8, 3, 0.4));
  std::ofstream(dir / "a/readme.txt") << "ignored";
  const TripletDataset d = load_triplets(dir.path());
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.at(1).middle(0, 0, 0), 128 / 255.0);  // 8-bit quantized 0.5
  EXPECT_EQ(d.at(2).middle(0, 0, 0), 102 / 255.0);

  write_png(dir / "b/3.png", Image(6, 9, 3));
  EXPECT_THROW(load_triplets(dir.path()), std::runtime_error);
  testing::ScratchDir empty("dataset_empty");
  EXPECT_THROW(load_triplets(empty.path()), std::runtime_error);
  EXPECT_THROW(load_triplets(empty / "nope"), std::runtime_error);
}

TEST(Dataset, PatchesShareWindowAndFlips) {
  Triplet t;
  t.first = Image(testing::random_grid(12, 10, 1));
  t.middle = t.first;
  t.last = t.first;
  const TripletDataset d = TripletDataset::from_triplets({t});
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Triplet p = sample_patch(d, 0, {6, true, true}, rng);
    EXPECT_EQ(p.first.extent(), (Extent{6, 6}));
    EXPECT_EQ(p.first, p.middle);
    EXPECT_EQ(p.first, p.last);
  }
  EXPECT_THROW(sample_patch(d, 0, {13, false, false}, rng), std::invalid_argument);
  EXPECT_EQ(sample_batch(d, {4, false, false}, 5, rng).size(), 5u);
}

TEST(Synthetic, TextureStatisticsAndShift) {
  std::mt19937_64 rng(1);
  const RealGrid tex = random_texture(32, 1.5, 0.02, rng);
  double mean = 0.0, var = 0.0;
  for (double v : tex) mean += v;
  mean /= tex.size();
  for (double v : tex) var += (v - mean) * (v - mean);
  var /= tex.size();
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-12);

  const RealGrid moved = fourier_shift(tex, 3.0, -5.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) EXPECT_NEAR(moved((y + 3) % 32, (x + 27) % 32), tex(y, x), 1e-12);
}

TEST(Synthetic, DatasetIsSeededAndValidated) {
  SyntheticConfig s;
  s.size = 16;
  s.count = 3;
  const TripletDataset a = synthetic_dataset(s), b = synthetic_dataset(s);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.at(i).middle, b.at(i).middle);
  s.min_shift = 5;
  s.max_shift = 4;
  EXPECT_THROW(synthetic_dataset(s), std::invalid_argument);
}

}  // namespace
}  // namespace phasenet
