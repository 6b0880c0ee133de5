#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "mmrec/ingestion.hpp"
#include "oracles.hpp"

using namespace mmrec;

namespace {

std::filesystem::path write(const oracle::TempDir& dir, const std::string& name,
                            const std::string& text) {
  auto p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

ItemMetadata meta(const std::string& item, std::optional<std::string> url,
                  std::optional<std::string> text) {
  return {item, std::move(url), std::move(text), {}};
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Config;
}

}  // namespace

TEST(ParseInteractions, CountsUsersItems) {
  oracle::TempDir dir("ingest");
  auto s = parse_interactions(write(dir, "a.tsv", "u1\ti1\n u1\ti2\n"));
  EXPECT_EQ(s.num_users(), 1u);
  EXPECT_EQ(s.num_items(), 2u);
  EXPECT_EQ(s.num_interactions(), 2u);
}

TEST(ParseInteractions, DeduplicatesAndIgnoresExtraColumns) {
  oracle::TempDir dir("ingest");
  auto s = parse_interactions(write(dir, "a.tsv", "u1\ti1\t5\t123\nu1\ti1\n\nu2\ti1\r\n"));
  EXPECT_EQ(s.num_interactions(), 2u);
  EXPECT_EQ(s.entries()[1], (InteractionSet::Entry{"u2", "i1"}));
}

TEST(ParseInteractions, MalformedLineReportsLineNumber) {
  oracle::TempDir dir("ingest");
  try {
    parse_interactions(write(dir, "a.tsv", "u1\ti1\nu1\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Malformed);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseInteractions, MissingFileIsIo) {
  EXPECT_EQ(code_of([] { parse_interactions("/nonexistent/x.tsv"); }), ErrorCode::Io);
}

TEST(ParseMetadata, FullAndPartialRecords) {
  oracle::TempDir dir("ingest");
  auto md = parse_item_metadata(write(dir, "m.jsonl",
                                      "{\"item\":\"i1\",\"imUrl\":\"http://a\",\"description\":\"d\"}\n"
                                      "{\"item\":\"i2\"}\n"
                                      "{\"item\":\"i3\",\"brand\":\"acme\",\"price\":3}\n"));
  ASSERT_EQ(md.size(), 3u);
  EXPECT_EQ(md[0].item_token, "i1");
  EXPECT_EQ(md[0].image_url, "http://a");
  EXPECT_EQ(md[0].description, "d");
  EXPECT_FALSE(md[1].image_url.has_value());
  EXPECT_FALSE(md[1].description.has_value());
  EXPECT_EQ(md[2].extra.at("brand"), "acme");
}

TEST(ParseMetadata, DuplicateItem) {
  oracle::TempDir dir("ingest");
  auto p = write(dir, "m.jsonl", "{\"item\":\"i1\"}\n{\"item\":\"i1\"}\n");
  EXPECT_EQ(code_of([&] { parse_item_metadata(p); }), ErrorCode::DuplicateItem);
}

TEST(ParseMetadata, UnparsableLine) {
  oracle::TempDir dir("ingest");
  auto p = write(dir, "m.jsonl", "{\"item\":\"i1\"}\n{not json\n");
  EXPECT_EQ(code_of([&] { parse_item_metadata(p); }), ErrorCode::Malformed);
  auto q = write(dir, "n.jsonl", "{\"imUrl\":\"http://a\"}\n");
  EXPECT_EQ(code_of([&] { parse_item_metadata(q); }), ErrorCode::Malformed);
}

TEST(DescriptionRule, InvalidForms) {
  EXPECT_TRUE(is_invalid_description(std::nullopt));
  EXPECT_TRUE(is_invalid_description(std::string("")));
  EXPECT_TRUE(is_invalid_description(std::string(" \t\n")));
  EXPECT_TRUE(is_invalid_description(std::string("NaN")));
  EXPECT_TRUE(is_invalid_description(std::string("nan")));
  EXPECT_TRUE(is_invalid_description(std::string("NAN")));
  EXPECT_FALSE(is_invalid_description(std::string("banana")));
}

TEST(UrlRule, SyntacticCheck) {
  EXPECT_TRUE(syntactic_url_check("http://img.example.org/a.jpg"));
  EXPECT_TRUE(syntactic_url_check("https://x.y/z"));
  EXPECT_FALSE(syntactic_url_check("not a url"));
  EXPECT_FALSE(syntactic_url_check(""));
}

TEST(Prefilter, EmptyDescriptionDropsItemAndItsInteractions) {
  InteractionSet s({{"u1", "a"}, {"u1", "b"}, {"u2", "c"}, {"u2", "b"}, {"u3", "a"}});
  std::vector<ItemMetadata> md{meta("a", "http://a", "x"), meta("b", "http://b", ""),
                               meta("c", "http://c", "z")};
  auto res = prefilter(s, md);
  EXPECT_EQ(res.interactions.num_items(), 2u);
  EXPECT_EQ(res.interactions.num_interactions(), 3u);
  EXPECT_EQ(res.report.interactions_dropped, 2u);
  EXPECT_EQ(res.report.items_removed_missing_textual, 1u);
  EXPECT_EQ(res.report.items_before, 3u);
  EXPECT_EQ(res.report.items_after, 2u);
}

TEST(Prefilter, AllValidIsIdentity) {
  InteractionSet s({{"u1", "a"}, {"u2", "b"}});
  std::vector<ItemMetadata> md{meta("a", "http://a", "x"), meta("b", "http://b", "y")};
  auto res = prefilter(s, md);
  EXPECT_EQ(res.interactions.entries(), s.entries());
  EXPECT_EQ(res.report.interactions_dropped, 0u);
  EXPECT_TRUE(res.report.removed_items.empty());
}

TEST(Prefilter, FailingUrlOracleEmptiesEverything) {
  InteractionSet s({{"u1", "a"}, {"u2", "b"}});
  std::vector<ItemMetadata> md{meta("a", "http://a", "x"), meta("b", "http://b", "y")};
  auto res = prefilter(s, md, [](const std::string&, const std::string&) { return false; });
  EXPECT_TRUE(res.interactions.empty());
  EXPECT_EQ(res.report.items_removed_missing_visual, 2u);
  EXPECT_EQ(res.report.users_after, 0u);
}

TEST(Prefilter, MissingMetadataAndUsersLeftEmpty) {
  InteractionSet s({{"u1", "a"}, {"u2", "ghost"}});
  std::vector<ItemMetadata> md{meta("a", "http://a", "x")};
  auto res = prefilter(s, md);
  EXPECT_EQ(res.report.items_removed_missing_metadata, 1u);
  EXPECT_EQ(res.report.users_before, 2u);
  EXPECT_EQ(res.report.users_after, 1u);
}

TEST(Prefilter, PropertiesOnRandomCatalogs) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    InteractionSet s;
    for (int k = 0; k < 80; ++k)
      s.add({"u" + std::to_string(gen() % 15), "i" + std::to_string(gen() % 25)});
    std::vector<ItemMetadata> md;
    for (int i = 0; i < 25; ++i) {
      if (gen() % 10 == 0) continue;  // missing metadata
      const int kind = static_cast<int>(gen() % 6);
      md.push_back(meta("i" + std::to_string(i),
                        kind == 0 ? std::nullopt : std::optional<std::string>(kind == 1 ? "bad" : "http://x"),
                        kind == 2 ? std::optional<std::string>("nan") : std::optional<std::string>("ok")));
    }
    auto once = prefilter(s, md);
    auto twice = prefilter(once.interactions, md);
    EXPECT_EQ(twice.interactions.entries(), once.interactions.entries());  // idempotent
    EXPECT_EQ(twice.report.interactions_dropped, 0u);

    const std::set<std::string> removed(once.report.removed_items.begin(),
                                        once.report.removed_items.end());
    std::size_t touching = 0;
    for (const auto& e : s.entries()) {
      if (removed.count(e.second))
        ++touching;
      else
        EXPECT_TRUE(once.interactions.contains(e.first, e.second));  // survivors kept
    }
    EXPECT_EQ(once.report.interactions_dropped, touching);
    EXPECT_EQ(once.report.items_after, once.report.items_before - removed.size());
    EXPECT_EQ(once.report.interactions_dropped + once.interactions.num_interactions(),
              s.num_interactions());
  }
}

TEST(KCore, IterativeThresholds) {
  InteractionSet s({{"u1", "a"}, {"u1", "b"}, {"u2", "a"}, {"u2", "b"}, {"u3", "c"}});
  auto k = kcore_filter(s, 2, 2);
  EXPECT_EQ(k.num_interactions(), 4u);
  EXPECT_EQ(k.num_users(), 2u);
  EXPECT_EQ(kcore_filter(s, 0, 0).num_interactions(), 5u);
  EXPECT_TRUE(kcore_filter(s, 3, 0).empty());
}

TEST(FilterReport, JsonHasAllCounts) {
  FilterReport r;
  r.items_before = 5;
  r.items_after = 3;
  r.removed_items = {"x", "y"};
  auto j = to_json(r);
  EXPECT_EQ(j["items_before"], 5);
  EXPECT_EQ(j["items_after"], 3);
  EXPECT_EQ(j["removed_items"].size(), 2u);
  EXPECT_TRUE(j.contains("interactions_dropped"));
  EXPECT_TRUE(j.contains("users_after"));
}
