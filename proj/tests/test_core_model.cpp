#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dtr/dataset.hpp"
#include "dtr/decision_list.hpp"
#include "dtr/region.hpp"

using namespace dtr;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

Region random_region(std::mt19937_64& rng, int d) {
  std::uniform_int_distribution<int> form_draw(0, 6);
  std::uniform_int_distribution<int> col(0, d - 1);
  std::uniform_real_distribution<double> tau(-2.0, 2.0);
  const auto form = static_cast<RegionForm>(form_draw(rng));
  if (form == RegionForm::All) return Region::all();
  if (form == RegionForm::Le) return Region::le(col(rng), tau(rng));
  if (form == RegionForm::Gt) return Region::gt(col(rng), tau(rng));
  int j1 = col(rng), j2 = col(rng);
  if (j1 == j2) j2 = (j1 + 1) % d;
  if (j1 > j2) std::swap(j1, j2);
  return Region::pair(form, j1, tau(rng), j2, tau(rng));
}

}  // namespace

TEST_CASE("region membership follows the inequality conventions") {
  CHECK(region_contains(Region::all(), vec({1.0, 5.0})));
  CHECK(region_contains(Region::le(0, 1.0), vec({1.0, 5.0})));  // boundary inclusive
  CHECK_FALSE(region_contains(Region::pair(RegionForm::GtLe, 0, 0.0, 1, 2.0), vec({0.0, 1.0})));
  CHECK(region_contains(Region::pair(RegionForm::GtLe, 0, 0.0, 1, 2.0), vec({0.1, 1.0})));
  CHECK_THROWS_AS((void)region_contains(Region::le(3, 0.0), vec({1.0})), Error);
}

TEST_CASE("region var counts") {
  CHECK(Region::all().var_count() == 0);
  CHECK(Region::le(2, 1.0).var_count() == 1);
  CHECK(Region::pair(RegionForm::LeGt, 0, 1.0, 3, 2.0).var_count() == 2);
  CHECK_THROWS_AS(Region::pair(RegionForm::LeLe, 3, 0.0, 1, 0.0), Error);
}

TEST_CASE("LE membership is monotone in the threshold") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> draw(-3.0, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = draw(rng);
    double t1 = draw(rng), t2 = draw(rng);
    if (t1 > t2) std::swap(t1, t2);
    if (region_contains(Region::le(0, t1), vec({x})))
      CHECK(region_contains(Region::le(0, t2), vec({x})));
  }
}

TEST_CASE("apply_list uses first-match semantics") {
  const DecisionList single{1, {Clause{Region::all(), 4}}};
  CHECK(apply_list(single, vec({1.0})) == 4);
  CHECK(apply_list(single, vec({-50.0})) == 4);

  DecisionList two{1, {Clause{Region::le(0, 0.0), 1}, Clause{Region::all(), 2}}};
  CHECK(apply_list(two, vec({-1.0})) == 1);
  CHECK(apply_list(two, vec({1.0})) == 2);

  DecisionList three{1,
                     {Clause{Region::le(0, 0.0), 1}, Clause{Region::le(1, 0.0), 2},
                      Clause{Region::all(), 3}}};
  CHECK(apply_list(three, vec({1.0, -1.0})) == 2);

  // Clauses after a whole-space clause are unreachable.
  DecisionList padded = three;
  padded.clauses.push_back(Clause{Region::le(0, 100.0), 9});
  padded.clauses.push_back(Clause{Region::all(), 9});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> draw(-5.0, 5.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd x = vec({draw(rng), draw(rng)});
    CHECK(apply_list(padded, x) == apply_list(three, x));
  }
}

TEST_CASE("apply_list rejects malformed lists") {
  CHECK_THROWS_AS(apply_list(DecisionList{1, {}}, vec({0.0})), Error);
  CHECK_THROWS_AS(apply_list(DecisionList{1, {Clause{Region::le(0, 0.0), 1}}}, vec({0.0})), Error);
}

TEST_CASE("empirical_rho counts the symmetric difference") {
  Eigen::MatrixXd X(4, 1);
  X << -1.0, -0.5, 0.5, 1.0;
  CHECK(empirical_rho(Region::le(0, 0.0), Region::le(0, 0.0), X) == 0.0);
  CHECK(empirical_rho(Region::le(0, 0.0), Region::all(), X) == doctest::Approx(0.5));

  // Thresholds falling in the same gap of a binary column pick the same rows.
  Eigen::MatrixXd B(6, 1);
  B << 0, 0, 1, 1, 0, 1;
  CHECK(empirical_rho(Region::le(0, 0.0), Region::le(0, 0.5), B) == 0.0);
}

TEST_CASE("empirical_rho is a pseudometric on random triples") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> draw(0.0, 1.0);
  Eigen::MatrixXd X(40, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = draw(rng);
  for (int rep = 0; rep < 200; ++rep) {
    const Region a = random_region(rng, 3);
    const Region b = random_region(rng, 3);
    const Region c = random_region(rng, 3);
    const double ab = empirical_rho(a, b, X);
    const double ba = empirical_rho(b, a, X);
    const double ac = empirical_rho(a, c, X);
    const double cb = empirical_rho(c, b, X);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab <= ac + cb + 1e-15);
  }
}

TEST_CASE("render_list follows the paragraph style") {
  const std::vector<std::string> names{"age", "gender", "race", "SUM-D"};
  const std::vector<std::string> actions{"placebo", "bupropion", "paroxetine"};

  DecisionList always{1, {Clause{Region::all(), 1}}};
  CHECK(render_list(always, names, actions) == "Else bupropion.");

  DecisionList paper{1,
                     {Clause{Region::gt(3, 8.625), 1},
                      Clause{Region::pair(RegionForm::LeLe, 2, 0.0, 3, 4.875), 2},
                      Clause{Region::all(), 0}}};
  const std::string text = render_list(paper, names, actions);
  CHECK(text.find("If SUM-D > 8.625 then bupropion;") == 0);
  CHECK(text.find("Else if race <= 0 and SUM-D <= 4.875 then paroxetine;") != std::string::npos);
  CHECK(text.find("Else placebo.") != std::string::npos);
}

TEST_CASE("regime documents use the exact field names") {
  Regime regime;
  regime.stages.push_back(DecisionList{
      1, {Clause{Region::le(3, 8.625), 1}, Clause{Region::all(), 0}}});
  const std::string text = serialize_regime(regime, {{"placebo", "bupropion"}});
  CHECK(text.find("\"stages\"") != std::string::npos);
  CHECK(text.find("\"t\": 1") != std::string::npos);
  CHECK(text.find("\"clauses\"") != std::string::npos);
  CHECK(text.find("\"form\": \"LE\"") != std::string::npos);
  CHECK(text.find("\"j\": 3") != std::string::npos);
  CHECK(text.find("\"tau\": 8.625") != std::string::npos);
  CHECK(text.find("\"action\": \"bupropion\"") != std::string::npos);
  CHECK(text.find("\"form\": \"ALL\"") != std::string::npos);
}

TEST_CASE("regime documents round-trip") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_int_distribution<int> act(0, 2);
  for (int rep = 0; rep < 100; ++rep) {
    Regime regime;
    std::vector<std::vector<std::string>> labels;
    const int T = 1 + rep % 3;
    for (int t = 1; t <= T; ++t) {
      DecisionList list;
      list.stage = t;
      const int L = len(rng);
      for (int l = 0; l + 1 < L; ++l) {
        Region r = random_region(rng, 4);
        list.clauses.push_back(Clause{r, act(rng)});
      }
      list.clauses.push_back(Clause{Region::all(), act(rng)});
      regime.stages.push_back(list);
      labels.push_back({"a0", "a1", "a2"});
    }
    const std::string text = serialize_regime(regime, labels);
    const ParsedRegime parsed = deserialize_regime(text);
    REQUIRE(parsed.regime.stages.size() == regime.stages.size());
    // Action indices may be renumbered by first appearance; compare labels.
    for (std::size_t s = 0; s < regime.stages.size(); ++s) {
      REQUIRE(parsed.regime.stages[s].clauses.size() == regime.stages[s].clauses.size());
      for (std::size_t c = 0; c < regime.stages[s].clauses.size(); ++c) {
        const Clause& got = parsed.regime.stages[s].clauses[c];
        const Clause& want = regime.stages[s].clauses[c];
        CHECK(got.region == want.region);
        CHECK(parsed.action_labels[s][static_cast<std::size_t>(got.action)] ==
              labels[s][static_cast<std::size_t>(want.action)]);
      }
    }
    CHECK(serialize_regime(parsed.regime, parsed.action_labels) ==
          serialize_regime(parsed.regime, parsed.action_labels));
  }
}

TEST_CASE("regime parsing rejects bad documents") {
  CHECK_THROWS_AS(deserialize_regime("{"), Error);
  CHECK_THROWS_AS(deserialize_regime(R"({"stages":[{"t":1,"clauses":[]}]})"), Error);
  // Last clause must be the whole space.
  CHECK_THROWS_AS(deserialize_regime(
                      R"({"stages":[{"t":1,"clauses":[{"form":"LE","j":0,"tau":1,"action":"a"}]}]})"),
                  Error);
  CHECK_THROWS_AS(deserialize_regime(
                      R"({"stages":[{"t":1,"clauses":[{"form":"LE","j":0,"action":"a"},{"form":"ALL","action":"a"}]}]})"),
                  Error);
  const char* spec_doc =
      R"({"stages":[{"t":1,"clauses":[{"form":"LE","j":3,"tau":8.625,"action":"bupropion"},{"form":"ALL","action":"placebo"}]}]})";
  const ParsedRegime parsed = deserialize_regime(spec_doc);
  CHECK(parsed.regime.stages[0].clauses[0].region == Region::le(3, 8.625));
  CHECK(parsed.action_labels[0][0] == "bupropion");
}

TEST_CASE("dataset materializes histories with action and reward columns") {
  StageData s1;
  s1.covariates = Eigen::MatrixXd(3, 2);
  s1.covariates << 1, 2, 3, 4, 5, 6;
  s1.covariate_names = {"s1_1", "s1_2"};
  s1.actions = {0, 1, 0};
  s1.action_labels = {"-1", "1"};
  s1.rewards = vec({0.5, -0.5, 1.5});

  StageData s2;
  s2.covariates = Eigen::MatrixXd(3, 1);
  s2.covariates << 7, 8, 9;
  s2.covariate_names = {"s2"};
  s2.actions = {1, 1, 0};
  s2.action_labels = {"-1", "1"};
  s2.rewards = vec({1.0, 2.0, 3.0});

  const TrajectoryDataset data({s1, s2});
  CHECK(data.n() == 3);
  CHECK(data.stage_count() == 2);
  CHECK(data.history_dim(1) == 2);
  CHECK(data.history_dim(2) == 5);  // p1 + p2 + action + reward
  CHECK(data.history(2)(0, 2) == 0.0);   // stage-1 action index
  CHECK(data.history(2)(1, 2) == 1.0);
  CHECK(data.history(2)(0, 3) == 0.5);   // stage-1 reward
  CHECK(data.history(2)(2, 4) == 9.0);   // stage-2 covariate
  CHECK(data.history_names(2) ==
        std::vector<std::string>{"s1_1", "s1_2", "a1", "y1", "s2"});

  StageData bad = s1;
  bad.actions = {0, 2, 0};  // outside the action set
  CHECK_THROWS_AS(TrajectoryDataset({bad}), Error);
}
