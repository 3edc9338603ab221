#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "eqodds/csv_io.h"
#include "eqodds/errors.h"
#include "eqodds/random.h"

namespace eqodds::io {
namespace {

TEST(Csv, MinimalFile) {
  const auto d = parse_csv("x0,x1,a,y\n0.5,1,0,1\n-2,3e-3,1,0\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d[0].x, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(d[1].x[1], 3e-3);
  EXPECT_EQ(d[1].a, 1);
  EXPECT_EQ(d[1].y, 0);
  EXPECT_FALSE(d.has_scores());
}

TEST(Csv, ScoreColumnAndIgnoredExtras) {
  const auto d = parse_csv("id,y,a,x0,score\n7,1,1,2.5,0.9\n8,0,0,1.5,0.1\n");
  ASSERT_TRUE(d.has_scores());
  EXPECT_EQ(d.scores()[0], 0.9);
  EXPECT_EQ(d[1].x[0], 1.5);
  const auto renamed = parse_csv("x0,a,y,p\n1,0,1,0.3\n", "p");
  EXPECT_EQ(renamed.scores()[0], 0.3);
}

TEST(Csv, SchemaErrors) {
  EXPECT_THROW(parse_csv("x0,a\n1,0\n"), SchemaError);
  EXPECT_THROW(parse_csv("x0,y\n1,0\n"), SchemaError);
  EXPECT_THROW(parse_csv("x0,x2,a,y\n1,2,0,1\n"), SchemaError);
}

TEST(Csv, ParseErrorsCarryLine) {
  try {
    parse_csv("x0,a,y\n1,0,1\n1,0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_csv("x0,a,y\n1,0,1\n2,0,1\nabc,1,0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_csv("x0,a,y\n1,2,1\n"), ParseError);
  EXPECT_THROW(parse_csv("x0,a,y\n1,0,0.5\n"), ParseError);
  EXPECT_THROW(parse_csv("x0,a,a,y\n1,0,0,1\n"), ParseError);
  EXPECT_THROW(parse_csv(""), ParseError);
}

TEST(Csv, RoundTripIsExact) {
  Rng rng(99);
  std::vector<LabeledSample> rows;
  std::vector<double> scores;
  for (int i = 0; i < 10000; ++i) {
    LabeledSample s;
    for (int j = 0; j < 3; ++j) s.x.push_back(rng.normal() * std::pow(10.0, rng.uniform() * 20 - 10));
    s.a = rng.bernoulli(0.3);
    s.y = rng.bernoulli(0.6);
    rows.push_back(s);
    scores.push_back(rng.uniform());
  }
  const Dataset d(rows, scores);
  const auto path = std::filesystem::temp_directory_path() / "eqodds_roundtrip.csv";
  write_csv(d, path);
  const auto back = load_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].x, d[i].x);
    EXPECT_EQ(back[i].a, d[i].a);
    EXPECT_EQ(back[i].y, d[i].y);
    EXPECT_EQ(back.scores()[i], d.scores()[i]);
  }
}

TEST(Table, ColumnsByName) {
  const auto t = parse_table("u,v\n1.5,2\n3,-4\n");
  EXPECT_EQ(t.column("v"), 1u);
  EXPECT_EQ(t.rows[1][1], -4.0);
  EXPECT_THROW(t.column("w"), SchemaError);
  EXPECT_EQ(parse_table(format_table(t)).rows, t.rows);
}

TEST(Files, MissingFileIsAnError) {
  EXPECT_THROW(load_csv("/nonexistent/eqodds.csv"), Error);
}

}  // namespace
}  // namespace eqodds::io
