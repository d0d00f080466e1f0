#include <gtest/gtest.h>

#include <set>

#include "containerforge/rng.hpp"

using namespace cforge;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiverge) {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformStaysInRange) {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = r.uniform(-2.0, 3.0);
    ASSERT_GE(v, -2.0);
    ASSERT_LT(v, 3.0);
  }
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng r(9);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = r.uniform_int(-3, 3);
    ASSERT_GE(k, -3);
    ASSERT_LE(k, 3);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(r.uniform_int(5, 5), 5);
}

TEST(Rng, BernoulliDegenerateProbabilities) {
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_FALSE(r.bernoulli(0.0));
    ASSERT_TRUE(r.bernoulli(1.0));
  }
}

TEST(Rng, StreamsAreKeyedByIndexAndStage) {
  EXPECT_EQ(derive_seed(1, 0, "damage"), derive_seed(1, 0, "damage"));
  std::set<std::uint64_t> seeds;
  for (const char* stage : {"damage", "material", "decal", "env", "camera"})
    for (std::uint64_t i = 0; i < 20; ++i) seeds.insert(derive_seed(1, i, stage));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_NE(derive_seed(1, 0, "damage"), derive_seed(2, 0, "damage"));
}

TEST(Rng, UniformMeanIsCentered) {
  Rng r(11);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += r.uniform();
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}
