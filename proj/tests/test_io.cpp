#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "fld/errors.hpp"
#include "fld/io.hpp"
#include "oracles.hpp"

using namespace fld;
namespace fs = std::filesystem;

namespace {

std::string header(std::uint32_t n, std::uint32_t d, std::uint8_t dtype = 0) {
  std::string h = "FLD1";
  for (std::uint32_t v : {n, d})
    for (int b = 0; b < 4; ++b) h.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  h.push_back(static_cast<char>(dtype));
  return h;
}

void append_f32(std::string& s, float v) {
  unsigned char b[4];
  std::memcpy(b, &v, 4);  // test hosts are little-endian
  s.append(reinterpret_cast<const char*>(b), 4);
}

FeatureMatrix float_valued(std::size_t n, std::size_t d, std::uint64_t seed) {
  RowMatrix x = oracle::random_matrix(n, d, seed, 5.0);
  x = x.cast<float>().cast<double>();
  return FeatureMatrix(x, Role::Train);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fld_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string expect_format_error(std::string_view bytes) {
  try {
    parse_fvec(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected FormatError";
  return {};
}

}  // namespace

TEST(Fvec, KnownBytes) {
  std::string bytes = header(2, 3);
  for (float v : {1.0f, -2.5f, 0.0f, 3.25f, 1e-3f, -7.0f}) append_f32(bytes, v);
  const auto m = parse_fvec(bytes, Role::Generated);
  ASSERT_EQ(m.rows(), 2u);
  ASSERT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.role(), Role::Generated);
  EXPECT_EQ(m.data()(0, 1), -2.5);
  EXPECT_EQ(m.data()(1, 0), 3.25);
  EXPECT_EQ(m.data()(1, 1), static_cast<double>(1e-3f));
  EXPECT_EQ(encode_fvec(m), bytes);
}

TEST(Fvec, FileRoundTrip) {
  const auto m = float_valued(37, 5, 1);
  const auto path = scratch("round.fvec");
  write_features(m, path);
  const auto back = read_features(path, Role::Test);
  EXPECT_EQ(back.data(), m.data());
  EXPECT_EQ(back.role(), Role::Test);
}

TEST(Fvec, LargeRoundTrip) {
  const auto m = float_valued(100000, 4, 2);
  const std::string bytes = encode_fvec(m);
  EXPECT_EQ(bytes.size(), kFvecHeaderBytes + 100000u * 4u * 4u);
  EXPECT_EQ(parse_fvec(bytes).data(), m.data());
}

TEST(Fvec, TruncatedPayloadNamesOffset) {
  std::string bytes = header(3, 2);
  for (int i = 0; i < 5; ++i) append_f32(bytes, 1.0f);
  const std::string msg = expect_format_error(bytes);
  EXPECT_NE(msg.find("offset 33"), std::string::npos) << msg;
}

TEST(Fvec, TruncatedHeader) {
  EXPECT_NE(expect_format_error("FLD1\x02").find("offset 5"), std::string::npos);
  EXPECT_NE(expect_format_error("").find("offset 0"), std::string::npos);
}

TEST(Fvec, HeaderErrors) {
  std::string bad_magic = header(1, 1);
  bad_magic[0] = 'X';
  append_f32(bad_magic, 1.0f);
  EXPECT_NE(expect_format_error(bad_magic).find("magic"), std::string::npos);

  std::string bad_dtype = header(1, 1, 7);
  append_f32(bad_dtype, 1.0f);
  EXPECT_NE(expect_format_error(bad_dtype).find("offset 12"), std::string::npos);

  EXPECT_NE(expect_format_error(header(0, 3)).find("empty"), std::string::npos);
  EXPECT_NE(expect_format_error(header(3, 0)).find("empty"), std::string::npos);
}

TEST(Fvec, TrailingBytesRejected) {
  std::string bytes = header(1, 1);
  append_f32(bytes, 1.0f);
  bytes.push_back('\0');
  EXPECT_NE(expect_format_error(bytes).find("offset 17"), std::string::npos);
}

TEST(Fvec, NonFiniteValueRejected) {
  std::string bytes = header(1, 2);
  append_f32(bytes, 1.0f);
  append_f32(bytes, std::numeric_limits<float>::quiet_NaN());
  EXPECT_NE(expect_format_error(bytes).find("offset 17"), std::string::npos);
}

TEST(Fvec, FormatErrorIsDataError) {
  EXPECT_THROW(parse_fvec("nope"), DataError);
  EXPECT_THROW(read_features(scratch("does-not-exist.fvec")), FormatError);
}

TEST(Csv, HeaderIdsAndQuotes) {
  const auto m = read_features(fs::path(FLD_TEST_DATA_DIR) / "small.csv", Role::Generated);
  ASSERT_EQ(m.rows(), 3u);
  ASSERT_EQ(m.dim(), 3u);
  EXPECT_EQ(m.id(0), "img_000");
  EXPECT_EQ(m.id(2), "img,002");
  EXPECT_EQ(m.data()(1, 0), 1e-3);
  EXPECT_EQ(m.data()(0, 1), -1.5);
}

TEST(Csv, PlainNumbersWithoutIds) {
  const auto m = parse_csv("1,2\r\n3,4\n\n5,6\n");
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_FALSE(m.has_ids());
  EXPECT_EQ(m.data()(2, 1), 6.0);
}

TEST(Csv, RoundTripIsExact) {
  const FeatureMatrix m(oracle::random_matrix(20, 3, 4), Role::Train,
                        std::vector<std::string>(20, "a\"b,c"));
  const auto back = parse_csv(encode_csv(m));
  EXPECT_EQ(back.data(), m.data());
  EXPECT_EQ(back.ids(), m.ids());
  const auto path = scratch("round.csv");
  write_features(m, path);
  EXPECT_EQ(read_features(path).data(), m.data());
}

TEST(Csv, RaggedRowNamesLine) {
  try {
    parse_csv("1,2\n3,4\n5\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("1,x\n"), FormatError);
  EXPECT_THROW(parse_csv("1,\"2\n"), FormatError);
  EXPECT_THROW(parse_csv(""), FormatError);
  EXPECT_THROW(parse_csv("1,inf\n"), FormatError);
}

TEST(Bundle, LoadsFixturesWithRoles) {
  const fs::path dir = fs::path(FLD_TEST_DATA_DIR) / "moons";
  const auto b = load_bundle(dir / "train.fvec", dir / "test.fvec", dir / "gen.fvec");
  EXPECT_EQ(b.train.rows(), 2000u);
  EXPECT_EQ(b.test.rows(), 1000u);
  EXPECT_EQ(b.gen.rows(), 1000u);
  EXPECT_EQ(b.gen.role(), Role::Generated);
  ASSERT_EQ(b.manifest.size(), 3u);
  EXPECT_EQ(b.manifest[0].checksum.size(), 16u);
}

TEST(Bundle, DimensionMismatch) {
  const auto a = scratch("a.fvec"), c = scratch("c.fvec");
  write_features(float_valued(12, 2, 1), a);
  write_features(float_valued(12, 3, 2), c);
  EXPECT_THROW(load_bundle(a, a, c), DimensionError);
}

TEST(Json, NumbersUseSeventeenDigits) {
  nlohmann::json doc = {{"b", 0.1}, {"a", std::numeric_limits<double>::infinity()}, {"c", 3}};
  EXPECT_EQ(dump_json(doc, -1), "{\"a\":null,\"b\":0.10000000000000001,\"c\":3}\n");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.33333333333333331");
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
}

TEST(RankingCsv, TopRowsWithIds) {
  Vector s(3);
  s << 0.5, 2.0, -1.0;
  const auto r = make_ranking(RankingKind::Memorization, s);
  const FeatureMatrix gen(RowMatrix::Zero(3, 1), Role::Generated, {"x", "y", "z"});
  EXPECT_EQ(ranking_csv(r, gen, 2), "id,log_score,rank\ny,2,1\nx,0.5,2\n");
  const FeatureMatrix anon(RowMatrix::Zero(3, 1), Role::Generated);
  EXPECT_EQ(ranking_csv(r, anon, 0), "id,log_score,rank\n1,2,1\n0,0.5,2\n2,-1,3\n");
}
