#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "pgls/tour.hpp"
#include "pgls/tsp_instance.hpp"
#include "test_util.hpp"

using namespace pgls;
using pgls::testing::data_path;
using pgls::testing::oracle_distance;
using pgls::testing::oracle_tour_cost;

namespace {

const char* kTriangle =
    "NAME : tri\n"
    "TYPE : TSP\n"
    "DIMENSION : 3\n"
    "EDGE_WEIGHT_TYPE : EUC_2D\n"
    "NODE_COORD_SECTION\n"
    "1 0 0\n"
    "2 3 0\n"
    "3 0 4\n"
    "EOF\n";

}  // namespace

TEST(ParseTsplib, MinimalFile) {
  const TspInstance inst = parse_tsplib(std::string_view(kTriangle));
  EXPECT_EQ(inst.name(), "tri");
  EXPECT_EQ(inst.size(), 3u);
  EXPECT_EQ(inst.edge_weight_kind(), EdgeWeightKind::euc_2d);
  EXPECT_EQ(inst.coords()[1].x, 3.0);
  EXPECT_EQ(inst.coords()[2].y, 4.0);
}

TEST(ParseTsplib, Berlin52) {
  const TspInstance inst = load_tsplib(data_path("berlin52.tsp"));
  EXPECT_EQ(inst.name(), "berlin52");
  EXPECT_EQ(inst.size(), 52u);
  EXPECT_EQ(inst.edge_weight_kind(), EdgeWeightKind::euc_2d);
}

TEST(ParseTsplib, Att532Header) {
  const TspInstance inst = load_tsplib(data_path("att532.tsp"));
  EXPECT_EQ(inst.size(), 532u);
  EXPECT_EQ(inst.edge_weight_kind(), EdgeWeightKind::att);
}

TEST(ParseTsplib, ExplicitWeightsRejected) {
  const std::string text =
      "NAME : x\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EXPLICIT\nEDGE_WEIGHT_FORMAT : FULL_MATRIX\n";
  try {
    parse_tsplib(std::string_view(text));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_NE(std::string(e.what()).find("EXPLICIT"), std::string::npos);
  }
}

TEST(ParseTsplib, DimensionMismatch) {
  const std::string text =
      "NAME : x\nTYPE : TSP\nDIMENSION : 4\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 0 1\nEOF\n";
  try {
    parse_tsplib(std::string_view(text));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(ParseTsplib, MalformedHeaderAndCoordinates) {
  EXPECT_THROW(parse_tsplib(std::string_view("NAME : x\nGARBAGE\n")), ParseError);
  EXPECT_THROW(parse_tsplib(std::string_view("NAME : x\nDIMENSION : three\n")), ParseError);
  const std::string bad_coord =
      "NAME : x\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1\n3 0 1\nEOF\n";
  try {
    parse_tsplib(std::string_view(bad_coord));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
  EXPECT_THROW(load_tsplib(data_path("does_not_exist.tsp")), std::runtime_error);
}

TEST(EdgeCost, HandExamples) {
  const TspInstance inst("t", EdgeWeightKind::euc_2d, {{0, 0}, {3, 0}, {1, 1}});
  EXPECT_EQ(inst.edge_cost(0, 1), 3);
  EXPECT_EQ(inst.edge_cost(0, 2), 1);
  const TspInstance ceil("c", EdgeWeightKind::ceil_2d, {{0, 0}, {3, 0}, {1, 1}});
  EXPECT_EQ(ceil.edge_cost(0, 2), 2);
}

TEST(EdgeCost, ContractViolations) {
  const TspInstance inst = parse_tsplib(std::string_view(kTriangle));
  EXPECT_THROW(inst.edge_cost(1, 1), std::invalid_argument);
  EXPECT_THROW(inst.edge_cost(0, 3), std::out_of_range);
}

TEST(EdgeCost, MatchesScalarOracleAndIsSymmetric) {
  for (const char* file : {"att532.tsp", "berlin52.tsp", "pcb442.tsp"}) {
    const TspInstance inst = load_tsplib(data_path(file));
    for (City a = 0; a < inst.size(); ++a) {
      for (City b = a + 1; b < inst.size(); ++b) {
        const Cost c = inst.edge_cost(a, b);
        ASSERT_EQ(c, inst.edge_cost(b, a)) << file;
        ASSERT_GE(c, 0);
        ASSERT_EQ(c, oracle_distance(inst.edge_weight_kind(), inst.coords()[a], inst.coords()[b]))
            << file << " " << a << "-" << b;
      }
    }
  }
}

TEST(EdgeCost, Att532FirstPair) {
  const TspInstance inst = load_tsplib(data_path("att532.tsp"));
  // Cities 1 and 2: (7810, 6053) and (7798, 5709); sqrt((12^2 + 344^2) / 10) = 108.85, rounded up to 109.
  ASSERT_EQ(inst.coords()[0].x, 7810);
  ASSERT_EQ(inst.coords()[1].y, 5709);
  EXPECT_EQ(inst.edge_cost(0, 1), oracle_distance(EdgeWeightKind::att, inst.coords()[0], inst.coords()[1]));
  EXPECT_EQ(inst.edge_cost(0, 1), 109);
}

TEST(EdgeCost, OnTheFlyAboveMemoLimit) {
  const TspInstance big = pgls::testing::random_instance(TspInstance::kMemoLimit + 1, 5, 100000);
  for (City a = 0; a < 50; ++a) {
    const City b = static_cast<City>(big.size() - 1 - a);
    EXPECT_EQ(big.edge_cost(a, b), oracle_distance(EdgeWeightKind::euc_2d, big.coords()[a], big.coords()[b]));
  }
}

TEST(WriteTsplib, RoundTripIsBitExact) {
  std::vector<Point> pts{{0.1, 1e-300}, {123456.789, -0.0}, {1.0 / 3.0, 2.0 / 7.0}, {5e15, 7.25}};
  const TspInstance inst("frac", EdgeWeightKind::ceil_2d, pts);
  std::ostringstream out;
  write_tsplib(out, inst);
  const TspInstance back = parse_tsplib(std::string_view(out.str()));
  ASSERT_EQ(back.size(), inst.size());
  EXPECT_EQ(back.name(), "frac");
  EXPECT_EQ(back.edge_weight_kind(), EdgeWeightKind::ceil_2d);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(std::memcmp(&back.coords()[i].x, &pts[i].x, sizeof(double)), 0) << i;
    EXPECT_EQ(std::memcmp(&back.coords()[i].y, &pts[i].y, sizeof(double)), 0) << i;
  }

  const TspInstance att = load_tsplib(data_path("att532.tsp"));
  std::ostringstream out2;
  write_tsplib(out2, att);
  const TspInstance att_back = parse_tsplib(std::string_view(out2.str()));
  for (std::size_t i = 0; i < att.size(); ++i) {
    EXPECT_EQ(att_back.coords()[i].x, att.coords()[i].x);
    EXPECT_EQ(att_back.coords()[i].y, att.coords()[i].y);
  }
}

TEST(KnownOptimum, Registry) {
  EXPECT_EQ(known_optimum("att532"), Cost{27686});
  EXPECT_EQ(known_optimum("berlin52"), Cost{7542});
  EXPECT_FALSE(known_optimum("unknown_instance").has_value());

  const OptimaRegistry file = OptimaRegistry::load(data_path("optima.txt"));
  EXPECT_EQ(file.find("att532"), Cost{27686});
  EXPECT_EQ(file.find("pcb442"), Cost{50778});
  EXPECT_EQ(file.size(), OptimaRegistry::bundled().size());

  std::istringstream bad("berlin52 seven\n");
  EXPECT_THROW(OptimaRegistry::parse(bad), ParseError);
}

TEST(KnownOptimum, PublishedToursEvaluateToRegisteredOptimum) {
  for (const std::string name : {"berlin52", "pcb442"}) {
    const TspInstance inst = load_tsplib(data_path(name + ".tsp"));
    const std::vector<City> order = load_tour_file(data_path(name + ".opt.tour"));
    const Tour t(inst, order);
    EXPECT_EQ(t.cost(), *known_optimum(name)) << name;
    EXPECT_EQ(oracle_tour_cost(inst, order), *known_optimum(name)) << name;
  }
}

TEST(KnownOptimum, Att532ReferenceTour) {
  const std::string path = data_path("att532.opt.tour");
  if (!std::ifstream(path)) GTEST_SKIP() << "no att532 reference tour in data/";
  const TspInstance inst = load_tsplib(data_path("att532.tsp"));
  const std::vector<City> order = load_tour_file(path);
  EXPECT_EQ(oracle_tour_cost(inst, order), 27686);
  EXPECT_EQ(Tour(inst, order).cost(), 27686);
}

TEST(TourFile, RoundTripAndErrors) {
  const std::vector<City> order{2, 0, 1, 3};
  std::ostringstream out;
  write_tour_file(out, "x", order, 42);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_tour_file(in), order);

  std::istringstream unterminated("TOUR_SECTION\n1\n2\n3\n");
  EXPECT_THROW(parse_tour_file(unterminated), ParseError);
  std::istringstream zero("TOUR_SECTION\n0\n1\n-1\n");
  EXPECT_THROW(parse_tour_file(zero), ParseError);
}
