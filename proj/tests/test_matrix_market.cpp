#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sketchls/matrix_market.hpp"
#include "test_util.hpp"

using namespace sketchls;

namespace {

template <class T>
std::string to_text(const T& value) {
  std::ostringstream os;
  mm::write(os, value);
  return os.str();
}

}  // namespace

TEST(MatrixMarket, DenseRoundTripIsBitExact) {
  Eigen::MatrixXd m = test::random_matrix(9, 4, 21);
  m(0, 0) = 1e-300;
  m(1, 0) = -1.7976931348623157e308;
  m(2, 0) = 0.1;
  m(3, 0) = std::nextafter(1.0, 2.0);
  m(4, 0) = 4.9406564584124654e-324;
  const DenseMatrix a(m);
  const auto back = mm::to_dense(mm::parse(to_text(a)));
  EXPECT_EQ(back, a);
}

TEST(MatrixMarket, SparseRoundTripIsBitExact) {
  const auto s = SparseMatrix::from_triplets(5, 4, {{0, 1, 0.1}, {4, 3, -2.5e-17}, {2, 0, 3.0}, {2, 2, 1e300}});
  const auto parsed = mm::parse(to_text(s));
  ASSERT_TRUE(std::holds_alternative<SparseMatrix>(parsed));
  const auto& back = std::get<SparseMatrix>(parsed);
  EXPECT_EQ(back.nnz(), s.nnz());
  EXPECT_EQ(back.to_dense(), s.to_dense());
}

TEST(MatrixMarket, VectorRoundTripThroughFile) {
  const auto dir = test::scratch_dir("mm_vector");
  const Vector v(test::random_vector(17, 22));
  mm::write_file(dir / "v.mtx", v);
  EXPECT_EQ(mm::read_vector(dir / "v.mtx"), v);
}

TEST(MatrixMarket, RowVectorAcceptedAsVector) {
  const auto v = mm::parse_vector("%%MatrixMarket matrix array real general\n1 3\n1\n2\n3\n");
  EXPECT_EQ(v, (Vector{1, 2, 3}));
  EXPECT_THROW(mm::parse_vector("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"), ParseError);
}

TEST(MatrixMarket, SymmetricCoordinateExpands) {
  const auto a = mm::to_dense(mm::parse(
      "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n3 1 -1.0\n2 2 5\n"));
  EXPECT_EQ(a, DenseMatrix::from_rows({{2, 0, -1}, {0, 5, 0}, {-1, 0, 0}}));
}

TEST(MatrixMarket, SkewSymmetricAndPattern) {
  const auto skew =
      mm::to_dense(mm::parse("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n"));
  EXPECT_EQ(skew, DenseMatrix::from_rows({{0, -3}, {3, 0}}));
  const auto pattern = mm::to_dense(mm::parse("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n"));
  EXPECT_EQ(pattern, DenseMatrix::from_rows({{0, 0, 1}, {1, 0, 0}}));
}

TEST(MatrixMarket, IntegerFieldAndSymmetricArray) {
  const auto a = mm::to_dense(mm::parse("%%MatrixMarket matrix array integer symmetric\n2 2\n1\n2\n3\n"));
  EXPECT_EQ(a, DenseMatrix::from_rows({{1, 2}, {2, 3}}));
}

TEST(MatrixMarket, MalformedInputsAreParseErrors) {
  const char* bad[] = {
      "",
      "not a header\n1 1\n1\n",
      "%%MatrixMarket matrix array complex general\n1 1\n1 0\n",
      "%%MatrixMarket matrix array real general\n2 1\n1\n",
      "%%MatrixMarket matrix array real general\n1 1\n1\n2\n",
      "%%MatrixMarket matrix array real general\n1 1\nabc\n",
      "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
      "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
      "%%MatrixMarket matrix array real general\n1 1\nnan\n",
      "%%MatrixMarket matrix array real general\n0 1\n",
  };
  for (const char* text : bad) {
    EXPECT_THROW(mm::parse(text), ParseError) << text;
  }
}

TEST(MatrixMarket, MissingFileIsFileError) {
  try {
    mm::read("/nonexistent/dir/A.mtx");
    FAIL() << "expected a file error";
  } catch (const ParseError&) {
    FAIL() << "missing file should not be a parse error";
  } catch (const FileError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/dir/A.mtx");
  }
}
