#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmrec/splitter.hpp"
#include "oracles.hpp"

using namespace mmrec;

namespace {

InteractionSet random_set(std::mt19937_64& gen, int users, int items, int max_per_user) {
  InteractionSet s;
  for (int u = 0; u < users; ++u) {
    const int n = 1 + static_cast<int>(gen() % max_per_user);
    for (int k = 0; k < n; ++k)
      s.add({"u" + std::to_string(u), "i" + std::to_string(gen() % items)});
  }
  return s;
}

}  // namespace

TEST(SplitSizes, TenInteractionsDefaults) {
  auto s = user_split_sizes(10, SplitConfig{});
  EXPECT_EQ(s.test, 2u);
  EXPECT_EQ(s.validation, 1u);
  EXPECT_EQ(s.train, 7u);
}

TEST(SplitSizes, SingleInteractionStaysInTrain) {
  auto s = user_split_sizes(1, SplitConfig{});
  EXPECT_EQ(s.test, 0u);
  EXPECT_EQ(s.validation, 0u);
  EXPECT_EQ(s.train, 1u);
}

TEST(SplitSizes, RoundHalfUp) {
  EXPECT_EQ(round_half_up(0.5), 1u);
  EXPECT_EQ(round_half_up(1.5), 2u);
  EXPECT_EQ(round_half_up(2.4999), 2u);
  EXPECT_EQ(round_half_up(35 * 0.1), 4u);
  // n = 5: 5 * 0.2 = 1 test; 4 * 0.1 = 0.4 -> 0 validation
  auto s = user_split_sizes(5, SplitConfig{});
  EXPECT_EQ(s.test, 1u);
  EXPECT_EQ(s.validation, 0u);
}

TEST(SplitSizes, MinTrainCap) {
  SplitConfig cfg;
  cfg.test_ratio = 0.9;
  cfg.min_train_per_user = 3;
  auto s = user_split_sizes(4, cfg);
  EXPECT_EQ(s.train, 3u);
  EXPECT_EQ(s.test, 1u);
}

TEST(SplitConfig, RejectsOutOfRangeRatios) {
  SplitConfig cfg;
  cfg.test_ratio = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.test_ratio = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.test_ratio = 0.2;
  cfg.val_ratio_of_train = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Split, DeterministicUnderSeed) {
  std::mt19937_64 gen(4);
  auto s = random_set(gen, 40, 60, 12);
  SplitConfig cfg;
  cfg.seed = 99;
  auto a = split(s, cfg);
  auto b = split(s, cfg);
  EXPECT_EQ(a.train.entries(), b.train.entries());
  EXPECT_EQ(a.validation.entries(), b.validation.entries());
  EXPECT_EQ(a.test.entries(), b.test.entries());
  EXPECT_EQ(a.index, b.index);
  cfg.seed = 100;
  auto c = split(s, cfg);
  EXPECT_NE(a.test.entries(), c.test.entries());
}

TEST(Split, PerUserStreamsIgnoreOtherUsers) {
  // Adding a user must not change another user's split.
  InteractionSet a({{"u1", "a"}, {"u1", "b"}, {"u1", "c"}, {"u1", "d"}, {"u1", "e"},
                    {"u2", "a"}, {"u2", "b"}, {"u2", "c"}});
  InteractionSet b = a;
  for (const char* i : {"a", "b", "c", "d", "e"}) b.add({"u0", i});
  auto sa = split(a, SplitConfig{});
  auto sb = split(b, SplitConfig{});
  auto of = [](const InteractionSet& s, const std::string& u) {
    auto items = s.items_of(u);
    return std::vector<std::string>(items.begin(), items.end());
  };
  EXPECT_EQ(of(sa.test, "u1"), of(sb.test, "u1"));
  EXPECT_EQ(of(sa.train, "u1"), of(sb.train, "u1"));
}

TEST(Split, InvariantsOnRandomSets) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_set(gen, 30, 40, 15);
    SplitConfig cfg;
    cfg.seed = gen();
    auto b = split(s, cfg);
    // disjoint
    for (const auto& e : b.test.entries()) {
      EXPECT_FALSE(b.train.contains(e.first, e.second));
      EXPECT_FALSE(b.validation.contains(e.first, e.second));
    }
    for (const auto& e : b.validation.entries()) EXPECT_FALSE(b.train.contains(e.first, e.second));
    // train coverage
    for (const auto* set : {&b.validation, &b.test})
      for (const auto& e : set->entries()) {
        EXPECT_TRUE(b.index.user_index(e.first).has_value());
        EXPECT_TRUE(b.index.item_index(e.second).has_value());
      }
    // ratio bounds per user, wherever the min-train cap is inactive
    for (const auto& u : s.users()) {
      const std::size_t n = s.items_of(u).size();
      const auto sizes = user_split_sizes(n, cfg);
      const double raw = static_cast<double>(n) * cfg.test_ratio;
      if (std::floor(raw + 0.5) <= static_cast<double>(n - 1)) {
        const auto t = static_cast<double>(sizes.test);
        EXPECT_TRUE(t == std::floor(raw) || t == std::ceil(raw)) << n;
      }
      EXPECT_GE(b.train.items_of(u).size(), 1u);
      EXPECT_LE(b.test.items_of(u).size(), sizes.test);
    }
    EXPECT_TRUE(validate_bundle(b, {}).valid());
  }
}

TEST(Split, ConservationWithoutPurge) {
  // Each item is seen by many users, so nothing is cold and nothing purged.
  InteractionSet s;
  for (int u = 0; u < 30; ++u)
    for (int i = 0; i < 6; ++i) s.add({"u" + std::to_string(u), "i" + std::to_string(i)});
  auto b = split(s, SplitConfig{});
  EXPECT_EQ(b.train.num_interactions() + b.validation.num_interactions() +
                b.test.num_interactions(),
            s.num_interactions());
}

TEST(Split, ColdItemsArePurged) {
  // "z" has one interaction from a user with many items; if it lands in
  // test it is cold and must be purged.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    InteractionSet s;
    for (const char* i : {"a", "b", "c", "d", "z"}) s.add({"u1", i});
    for (const char* i : {"a", "b", "c", "d"}) s.add({"u2", i});
    SplitConfig cfg;
    cfg.seed = seed;
    auto b = split(s, cfg);
    const bool z_in_train = b.train.contains("u1", "z");
    EXPECT_EQ(b.index.item_index("z").has_value(), z_in_train);
    EXPECT_FALSE(!z_in_train && b.test.contains("u1", "z"));
  }
}

TEST(Split, EmptyInputIsDegenerate) {
  try {
    split(InteractionSet{}, SplitConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
  }
}

TEST(RemapFeatures, Permutes) {
  FeatureMatrix f{Modality::Visual, 2, {"i2", "i1"}, {2, 2, 1, 1}};
  IndexMap idx({"u"}, {"i1", "i2"});
  auto out = remap_features(f, idx);
  EXPECT_EQ(out.row_ids, (std::vector<std::string>{"i1", "i2"}));
  EXPECT_EQ(out.values, (std::vector<float>{1, 1, 2, 2}));
}

TEST(RemapFeatures, IdentityAndIdempotent) {
  FeatureMatrix f{Modality::Textual, 3, {"a", "b"}, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f}};
  IndexMap idx({"u"}, {"a", "b"});
  auto once = remap_features(f, idx);
  EXPECT_EQ(once, f);
  EXPECT_EQ(remap_features(once, idx), once);
}

TEST(RemapFeatures, DropsUnindexedRows) {
  FeatureMatrix f{Modality::Visual, 1, {"a", "b", "c"}, {1, 2, 3}};
  auto out = remap_features(f, IndexMap({"u"}, {"c", "a"}));
  EXPECT_EQ(out.values, (std::vector<float>{3, 1}));
}

TEST(RemapFeatures, MissingRow) {
  FeatureMatrix f{Modality::Visual, 1, {"i1", "i2"}, {1, 2}};
  try {
    remap_features(f, IndexMap({"u"}, {"i1", "i2", "i3"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFeatureRow);
    EXPECT_EQ(e.detail(), "i3");
  }
}

TEST(SplitBundleFiles, RoundTrip) {
  std::mt19937_64 gen(8);
  auto s = random_set(gen, 20, 30, 10);
  auto b = split(s, SplitConfig{});
  oracle::TempDir dir("split");
  write_split_bundle(b, dir.path());
  auto r = read_split_bundle(dir.path());
  EXPECT_EQ(r.index, b.index);
  EXPECT_EQ(r.seed, b.seed);
  auto sorted = [](const InteractionSet& x) {
    auto e = x.entries();
    std::sort(e.begin(), e.end());
    return e;
  };
  EXPECT_EQ(sorted(r.train), sorted(b.train));
  EXPECT_EQ(sorted(r.validation), sorted(b.validation));
  EXPECT_EQ(sorted(r.test), sorted(b.test));
}
