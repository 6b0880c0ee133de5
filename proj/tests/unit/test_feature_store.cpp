#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "mmrec/feature_store.hpp"
#include "oracles.hpp"

using namespace mmrec;

namespace {

FeatureMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t dim) {
  std::normal_distribution<float> nd(0.0f, 3.0f);
  FeatureMatrix m;
  m.modality = static_cast<Modality>(gen() % 4);
  m.dim = dim;
  for (std::size_t r = 0; r < rows; ++r) {
    m.row_ids.push_back("item-" + std::to_string(r) + std::string(gen() % 5, 'x'));
    for (std::size_t c = 0; c < dim; ++c) m.values.push_back(nd(gen));
  }
  return m;
}

ErrorCode decode_error(const std::string& bytes) {
  try {
    decode_features(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::Config;
}

bool bitwise_equal(const FeatureMatrix& a, const FeatureMatrix& b) {
  return a.modality == b.modality && a.dim == b.dim && a.row_ids == b.row_ids &&
         a.values.size() == b.values.size() &&
         std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) == 0;
}

}  // namespace

TEST(Mmfe, ByteLengthOfSmallExample) {
  FeatureMatrix m{Modality::Visual, 3, {"a", "bb"}, {1, 2, 3, 4, 5, 6}};
  const std::string bytes = encode_features(m);
  EXPECT_EQ(bytes.size(), oracle::mmfe_file_length(m.row_ids, 3));
  EXPECT_EQ(bytes.size(), 59u);
  const auto h = decode_header(bytes);
  EXPECT_EQ(h.row_count, 2u);
  EXPECT_EQ(h.dim, 3u);
  EXPECT_EQ(h.id_table_bytes, 7u);
}

TEST(Mmfe, HeaderFieldOffsets) {
  FeatureMatrix m{Modality::Textual, 2, {"q"}, {1.0f, -2.0f}};
  const std::string b = encode_features(m);
  EXPECT_EQ(b.substr(0, 4), "MMFE");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);  // version lo
  EXPECT_EQ(static_cast<unsigned char>(b[5]), 0);
  EXPECT_EQ(static_cast<unsigned char>(b[6]), 1);  // textual
  EXPECT_EQ(static_cast<unsigned char>(b[7]), 0);  // f32
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1);  // row_count lo
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 2);  // dim lo
  EXPECT_EQ(static_cast<unsigned char>(b[20]), 3);  // id table: 2 + 1
  EXPECT_EQ(static_cast<unsigned char>(b[28]), 1);  // id length lo
  EXPECT_EQ(b[30], 'q');
  // 1.0f = 0x3F800000 little-endian
  EXPECT_EQ(static_cast<unsigned char>(b[31]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(b[34]), 0x3F);
}

TEST(Mmfe, EmptyMatrix) {
  FeatureMatrix m{Modality::Audio, 4, {}, {}};
  const std::string bytes = encode_features(m);
  EXPECT_EQ(bytes.size(), 28u);
  auto back = decode_features(bytes);
  EXPECT_EQ(back.rows(), 0u);
  EXPECT_EQ(back.dim, 4u);
}

TEST(Mmfe, NanIsRejectedOnWrite) {
  FeatureMatrix m{Modality::Visual, 1, {"a"}, {std::nanf("")}};
  oracle::TempDir dir("mmfe");
  EXPECT_THROW(write_features(m, dir / "x.mmfe"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.mmfe"));
}

TEST(Mmfe, RandomRoundTripsAreBitwise) {
  std::mt19937_64 gen(17);
  oracle::TempDir dir("mmfe");
  for (int trial = 0; trial < 50; ++trial) {
    auto m = random_matrix(gen, gen() % 65, 1 + gen() % 512);
    write_features(m, dir / "m.mmfe");
    EXPECT_TRUE(bitwise_equal(read_features(dir / "m.mmfe"), m));
  }
}

TEST(Mmfe, RoundTripFiveByEight) {
  std::mt19937_64 gen(2);
  auto m = random_matrix(gen, 5, 8);
  auto back = decode_features(encode_features(m));
  EXPECT_TRUE(bitwise_equal(back, m));
  EXPECT_EQ(back.row_ids, m.row_ids);
}

TEST(Mmfe, CorruptHeaders) {
  FeatureMatrix m{Modality::Visual, 3, {"a", "bb"}, {1, 2, 3, 4, 5, 6}};
  const std::string good = encode_features(m);

  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  EXPECT_EQ(decode_error(bad), ErrorCode::BadMagic);

  bad = good;
  bad[4] = 2;
  EXPECT_EQ(decode_error(bad), ErrorCode::BadVersion);

  bad = good;
  bad[7] = 1;
  EXPECT_EQ(decode_error(bad), ErrorCode::BadDtype);

  bad = good;
  bad[6] = 17;
  EXPECT_EQ(decode_error(bad), ErrorCode::Malformed);

  EXPECT_EQ(decode_error(good.substr(0, 10)), ErrorCode::TruncatedFile);
  EXPECT_EQ(decode_error(good.substr(0, good.size() - 5)), ErrorCode::TruncatedFile);
  EXPECT_EQ(decode_error(good + "extra"), ErrorCode::SizeMismatch);

  bad = good;
  bad[28] = 5;  // first id claims 5 bytes
  EXPECT_EQ(decode_error(bad), ErrorCode::Malformed);
}

TEST(Mmfe, NonFinitePayloadIsRejectedOnRead) {
  FeatureMatrix m{Modality::Visual, 1, {"a"}, {1.0f}};
  std::string b = encode_features(m);
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(b.data() + b.size() - 4, &inf, 4);
  EXPECT_EQ(decode_error(b), ErrorCode::InvalidValue);
}

TEST(Mmfe, MissingFileIsIo) {
  try {
    read_features("/nonexistent/f.mmfe");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Mmfe, AtomicWriteLeavesNoTempFiles) {
  oracle::TempDir dir("mmfe");
  FeatureMatrix m{Modality::Visual, 1, {"a"}, {1.0f}};
  write_features(m, dir / "a.mmfe");
  write_features(m, dir / "a.mmfe");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(FeatureTsv, RoundTripsF32) {
  std::mt19937_64 gen(4);
  auto m = random_matrix(gen, 7, 5);
  oracle::TempDir dir("tsv");
  write_features_tsv(m, dir / "m.tsv");
  auto back = read_features_tsv(dir / "m.tsv", m.modality);
  EXPECT_TRUE(bitwise_equal(back, m));
}

TEST(Preprocess, Examples) {
  FeatureMatrix two{Modality::Visual, 1, {"a", "b"}, {1, 3}};
  EXPECT_EQ(preprocess(two, Preprocess::MinMax).values, (std::vector<float>{0, 1}));

  FeatureMatrix flat{Modality::Visual, 1, {"a", "b", "c"}, {2, 2, 2}};
  EXPECT_EQ(preprocess(flat, Preprocess::ZScore).values, (std::vector<float>{0, 0, 0}));
  EXPECT_EQ(preprocess(flat, Preprocess::MinMax).values, (std::vector<float>{0, 0, 0}));

  FeatureMatrix row{Modality::Visual, 2, {"a"}, {3, 4}};
  auto l2 = preprocess(row, Preprocess::L2Row).values;
  EXPECT_FLOAT_EQ(l2[0], 0.6f);
  EXPECT_FLOAT_EQ(l2[1], 0.8f);
}

TEST(Preprocess, NoneIsBitwiseIdentity) {
  std::mt19937_64 gen(6);
  auto m = random_matrix(gen, 9, 4);
  EXPECT_TRUE(bitwise_equal(preprocess(m, Preprocess::None), m));
}

TEST(Preprocess, ColumnStatistics) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = random_matrix(gen, 3 + gen() % 30, 1 + gen() % 10);
    // make one column constant
    for (std::size_t r = 0; r < m.rows(); ++r) m.row(r)[0] = 0.1f;
    auto z = preprocess(m, Preprocess::ZScore);
    auto mm = preprocess(m, Preprocess::MinMax);
    for (std::size_t c = 0; c < m.dim; ++c) {
      double mean = 0, lo = 1e9, hi = -1e9;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        mean += z.row(r)[c];
        lo = std::min<double>(lo, mm.row(r)[c]);
        hi = std::max<double>(hi, mm.row(r)[c]);
        EXPECT_GE(mm.row(r)[c], 0.0f);
        EXPECT_LE(mm.row(r)[c], 1.0f);
      }
      mean /= static_cast<double>(m.rows());
      double ss = 0;
      for (std::size_t r = 0; r < m.rows(); ++r) ss += (z.row(r)[c] - mean) * (z.row(r)[c] - mean);
      const double sd = std::sqrt(ss / static_cast<double>(m.rows() - 1));
      if (c == 0) {
        EXPECT_EQ(sd, 0.0);
        EXPECT_EQ(hi, 0.0);
        continue;
      }
      EXPECT_NEAR(mean, 0.0, 1e-6);
      EXPECT_NEAR(sd, 1.0, 1e-6);
      EXPECT_EQ(lo, 0.0);
      EXPECT_EQ(hi, 1.0);
    }
  }
}

TEST(Preprocess, ParseNames) {
  EXPECT_EQ(parse_preprocess("zscore"), Preprocess::ZScore);
  EXPECT_EQ(parse_preprocess("l2row"), Preprocess::L2Row);
  EXPECT_THROW(parse_preprocess("pca"), Error);
}
