#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hierclass/datagen.hpp"
#include "hierclass/dataset.hpp"
#include "oracles.hpp"

using namespace hierclass;

namespace {

PriorSet priors_for(ModelKind k, const ClassHierarchy& h) {
  std::vector<GammaPrior> levels{{1, 5}, {1, 20}, {1, 100}};
  return make_priors(k, h, {1, 10}, {1, 1}, levels);
}

}  // namespace

// Labels at a fixed x follow the model's analytic class probabilities.
TEST(Labels, FrequenciesMatchModelProbabilities) {
  auto h = hierarchies::eight_class();
  RngStream rng(1);
  for (ModelKind k : all_model_kinds) {
    ModelState s = draw_from_prior(k, h, 3, priors_for(k, h), rng);
    s.alpha *= 0.3;  // keep every class reasonably frequent
    s.coef *= 0.3;
    Eigen::VectorXd x(3);
    x << 0.4, -0.2, 0.7;
    Eigen::MatrixXd X = x.transpose().replicate(10000, 1);
    std::vector<int> y = draw_labels(s, h, X, rng);
    std::vector<double> counts(8, 0.0);
    for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
    auto ref = oracle::class_probs(s, h, x);
    std::vector<double> probs(ref.begin(), ref.end());
    EXPECT_GT(oracle::chi_square_p(counts, probs), 1e-3) << display_name(k);
  }
}

TEST(Labels, ZeroParametersGiveUniformClasses) {
  auto h = hierarchies::four_class();
  RngStream rng(2);
  for (ModelKind k : {ModelKind::mnl, ModelKind::cor_mnl}) {
    ModelState s = initial_state(k, h, 2, priors_for(k, h));
    Eigen::MatrixXd X = draw_uniform_covariates(10000, 2, -5, 5, rng);
    std::vector<int> y = draw_labels(s, h, X, rng);
    std::vector<double> counts(4, 0.0);
    for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
    EXPECT_GT(oracle::chi_square_p(counts, std::vector<double>(4, 0.25)), 1e-3);
  }
}

TEST(Labels, TreeDescentOnUnbalancedTree) {
  // zero parameters: P(leaf) = product of 1/c_m along the path
  auto h = parse_hierarchy("((a,b,c),d)");
  ModelState s = initial_state(ModelKind::tree_mnl, h, 1, priors_for(ModelKind::tree_mnl, h));
  RngStream rng(3);
  std::vector<int> y = draw_labels(s, h, Eigen::MatrixXd::Zero(12000, 1), rng);
  std::vector<double> counts(4, 0.0);
  for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
  EXPECT_GT(oracle::chi_square_p(counts, {1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5}), 1e-3);
}

TEST(Covariates, UniformRange) {
  RngStream rng(4);
  Eigen::MatrixXd X = draw_uniform_covariates(20000, 2, 0.0, 1.0, rng);
  EXPECT_GT(X.minCoeff(), 0.0);
  EXPECT_LT(X.maxCoeff(), 1.0);
  std::vector<double> col(X.col(0).data(), X.col(0).data() + X.rows());
  EXPECT_GT(oracle::ks_p_value(col, [](double v) { return v; }), 1e-3);
}

TEST(PriorDraws, PrecisionsFollowGamma) {
  auto h = hierarchies::four_class();
  RngStream rng(55);
  std::vector<double> lam1, lam2;
  for (int i = 0; i < 3000; ++i) {
    ModelState s = draw_from_prior(ModelKind::cor_mnl, h, 2, priors_for(ModelKind::cor_mnl, h), rng);
    lam1.push_back(1.0 / (s.tau(0) * s.tau(0)));
    lam2.push_back(1.0 / (s.tau(1) * s.tau(1)));
  }
  EXPECT_GT(oracle::ks_p_value(lam1, [](double x) { return 1.0 - std::exp(-x / 5.0); }), 1e-3);
  EXPECT_GT(oracle::ks_p_value(lam2, [](double x) { return 1.0 - std::exp(-x / 20.0); }), 1e-3);
}

TEST(Replication, SplitSizesAndDeterminism) {
  SimSpec spec;
  spec.priors = priors_for(ModelKind::mnl, spec.hierarchy);
  RngStream a(6), b(6);
  Replication r1 = generate_replication(spec, a);
  Replication r2 = generate_replication(spec, b);
  EXPECT_EQ(r1.train.size(), 100u);
  EXPECT_EQ(r1.test.size(), 9900u);
  EXPECT_EQ(r1.train.X, r2.train.X);
  EXPECT_EQ(r1.test.y, r2.test.y);
  spec.n_train = spec.n_total;
  EXPECT_THROW(spec.validate(), DataError);
  spec.n_train = 10;
  spec.generator = ModelKind::cor_mnl;
  EXPECT_THROW(spec.validate(), ModelError);
}

TEST(Csv, RoundTrip) {
  auto h = hierarchies::four_class();
  RngStream rng(7);
  Dataset d(draw_uniform_covariates(25, 3, -1, 1, rng), std::vector<int>(25));
  for (std::size_t i = 0; i < 25; ++i) d.y[i] = static_cast<int>(i % 4);
  d.feature_names = {"a", "b", "c"};
  std::stringstream ss;
  write_csv(ss, d, h.labels());
  CsvSchema schema;
  schema.labels = h.labels();
  Dataset back = read_csv(ss, schema);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.y, d.y);
  EXPECT_EQ(back.feature_names, d.feature_names);
}

TEST(Csv, ColumnSelectionAndWhitespace) {
  std::istringstream in("x1, label ,x2\r\n1.5, b ,2\n\n-3,a,+4e-1\n");
  CsvSchema schema;
  schema.labels = {"a", "b"};
  schema.feature_columns = {"x2", "x1"};
  Dataset d = read_csv(in, schema);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.y, (std::vector<int>{1, 0}));
  EXPECT_EQ(d.X(0, 0), 2.0);
  EXPECT_EQ(d.X(0, 1), 1.5);
  EXPECT_EQ(d.X(1, 0), 0.4);
}

TEST(Csv, Errors) {
  CsvSchema schema;
  schema.labels = {"a", "b"};
  auto read = [&](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in, schema);
  };
  EXPECT_THROW(read(""), DataError);
  EXPECT_THROW(read("x,y\n1,2\n"), DataError);
  try {
    read("label,x\na,1\nb,oops\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
  }
  try {
    read("label,x\na,1\nc,2\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown label 'c'"), std::string::npos);
  }
  EXPECT_THROW(read("label,x\na,1,2\n"), DataError);
  EXPECT_THROW(read("label,x\na,nan\n"), DataError);
  EXPECT_TRUE(read("label,x\n").empty());
  EXPECT_THROW(load_csv("/nonexistent/file.csv", schema), DataError);
}

TEST(Standardize, TrainStatisticsAppliedToOthers) {
  Eigen::MatrixXd X(3, 2);
  X << 1, 10, 2, 20, 3, 60;
  Dataset train(X, {0, 1, 0});
  Eigen::MatrixXd Xt(1, 2);
  Xt << 4, 30;
  std::vector<Dataset> others{Dataset(Xt, {1})};
  StandardizedData st = standardize(train, others);
  EXPECT_NEAR(st.train.X(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(st.train.X(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(st.train.X(2, 0), 1.0, 1e-15);
  const double sd2 = std::sqrt(((10 - 30.0) * (10 - 30.0) + (20 - 30.0) * (20 - 30.0) + 30.0 * 30.0) / 2.0);
  EXPECT_NEAR(st.train.X(2, 1), 30.0 / sd2, 1e-14);
  EXPECT_NEAR(st.others[0].X(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(st.others[0].X(0, 1), 0.0, 1e-15);
  EXPECT_TRUE(st.others[0].standardized);
  EXPECT_NEAR(st.train.X.col(1).mean(), 0.0, 1e-15);
}

TEST(Standardize, Errors) {
  Eigen::MatrixXd X(3, 2);
  X << 1, 5, 2, 5, 3, 5;
  EXPECT_THROW(standardize(Dataset(X, {0, 0, 0})), DataError);
  EXPECT_THROW(standardize(Dataset(Eigen::MatrixXd::Ones(1, 1), {0})), DataError);
}

TEST(Subsample, DisjointTrainingSetsAndRemainder) {
  RngStream rng(8);
  Dataset pool(draw_uniform_covariates(5556, 2, 0, 1, rng), std::vector<int>(5556, 0));
  for (std::size_t i = 0; i < pool.size(); ++i) pool.X(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  Splits s = subsample_splits(pool, 10, 200, rng);
  ASSERT_EQ(s.train.size(), 10u);
  EXPECT_EQ(s.test.size(), 3556u);
  std::set<int> seen;
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(s.train[r].size(), 200u);
    for (std::size_t i = 0; i < 200; ++i) {
      int row = s.train_rows[r][i];
      EXPECT_TRUE(seen.insert(row).second);
      EXPECT_EQ(s.train[r].X(static_cast<Eigen::Index>(i), 0), row);
    }
  }
  for (int row : s.test_rows) EXPECT_TRUE(seen.insert(row).second);
  EXPECT_EQ(seen.size(), 5556u);
}

TEST(Subsample, Errors) {
  RngStream rng(9);
  Dataset pool(Eigen::MatrixXd::Zero(10, 1), std::vector<int>(10, 0));
  EXPECT_THROW(subsample_splits(pool, 3, 4, rng), DataError);
  EXPECT_THROW(subsample_splits(pool, 2, 5, rng), DataError);
  EXPECT_THROW(subsample_splits(pool, 0, 5, rng), DataError);
  EXPECT_EQ(subsample_splits(pool, 3, 3, rng).test.size(), 1u);
}
