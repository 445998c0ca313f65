#include <gtest/gtest.h>

#include <filesystem>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"

using namespace rb;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform01(), b.uniform01());
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, "init"), derive_seed(1, "split"));
  EXPECT_NE(derive_seed(1, "init"), derive_seed(2, "init"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  EXPECT_EQ(derive_seed(9, "x"), derive_seed(9, "x"));
}

TEST(Rng, BelowStaysInRange) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(11);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  r.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, FileMatchesString) {
  const auto p = std::filesystem::temp_directory_path() / "rb_digest_test.txt";
  write_file(p, "hello\n");
  EXPECT_EQ(sha256_file(p), sha256_hex("hello\n"));
  EXPECT_EQ(read_file(p), "hello\n");
  std::filesystem::remove(p);
}

TEST(Digest, MissingFileIsIoError) {
  EXPECT_THROW(read_file("/nonexistent/rb/file"), IoError);
}

TEST(Errors, KindsMapToExitCodes) {
  EXPECT_EQ(static_cast<int>(ConfigError("x").kind()), 1);
  EXPECT_EQ(static_cast<int>(IntegrityError("x").kind()), 2);
  EXPECT_EQ(static_cast<int>(DomainError("x").kind()), 3);
  EXPECT_EQ(static_cast<int>(TrainingError("x").kind()), 3);
}
