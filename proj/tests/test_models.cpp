#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hierclass/models.hpp"
#include "hierclass/prior.hpp"
#include "hierclass/rng.hpp"
#include "oracles.hpp"

using namespace hierclass;

namespace {

ModelState random_state(ModelKind k, const ClassHierarchy& h, Eigen::Index p, RngStream& rng, double scale = 1.0) {
  ModelState s;
  s.kind = k;
  s.alpha.resize(num_intercepts(k, h));
  for (auto& v : s.alpha) v = rng.normal(0.0, scale);
  s.coef.resize(p, num_columns(k, h));
  for (Eigen::Index c = 0; c < s.coef.cols(); ++c)
    for (Eigen::Index l = 0; l < p; ++l) s.coef(l, c) = rng.normal(0.0, scale);
  s.tau0 = 0.5 + rng.uniform();
  s.tau.resize(num_tau(k, h));
  for (auto& v : s.tau) v = 0.3 + rng.uniform();
  return s;
}

Dataset make_data(const ClassHierarchy& h, int n, Eigen::Index p, RngStream& rng) {
  Eigen::MatrixXd X(n, p);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < p; ++l) X(i, l) = rng.uniform(-2.0, 2.0);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform() * static_cast<double>(h.num_classes()));
  }
  return {X, y};
}

}  // namespace

TEST(Softmax, TwoClassValue) {
  Eigen::VectorXd alpha(2);
  alpha << 1.0, 0.0;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd pr = softmax_probs(alpha, beta, x);
  EXPECT_NEAR(pr(0), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(pr(1), 1.0 - 0.7310585786300049, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  RngStream rng(3);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd alpha(5), x(3);
    Eigen::MatrixXd beta(3, 5);
    for (auto& v : alpha) v = rng.normal(0, 3);
    for (auto& v : x) v = rng.normal();
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = rng.normal(0, 3);
    double shift = rng.normal(0, 50);
    Eigen::VectorXd a = softmax_probs(alpha, beta, x);
    Eigen::VectorXd b = softmax_probs((alpha.array() + shift).matrix(), beta, x);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  Eigen::VectorXd alpha(3);
  alpha << 1000.0, 999.0, -1000.0;
  Eigen::VectorXd pr = softmax_probs(alpha, Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1));
  EXPECT_TRUE(pr.allFinite());
  EXPECT_NEAR(pr(0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Softmax, Errors) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(softmax_probs(alpha, Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)), ModelError);
  Eigen::VectorXd bad(2);
  bad << 0.0, NAN;
  EXPECT_THROW(softmax_probs(bad, Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1)), ModelError);
}

TEST(CorMnl, EffectiveCoefficientsSumAlongPaths) {
  auto h = hierarchies::four_class();
  ModelState s;
  s.kind = ModelKind::cor_mnl;
  s.alpha = Eigen::VectorXd::Zero(4);
  s.tau = Eigen::VectorXd::Ones(3);
  s.coef.resize(1, 6);
  for (int b = 0; b < 6; ++b) s.coef(0, b) = std::pow(10.0, b);
  Eigen::MatrixXd beta = cormnl_effective_beta(s, h);
  for (int j = 0; j < 4; ++j) {
    double expected = 0.0;
    for (int b : h.leaf_path(j)) expected += std::pow(10.0, b);
    EXPECT_EQ(beta(0, j), expected);
  }
  // classes 1 and 2 share the first-level branch, so they differ only by their leaf branches
  const auto& p1 = h.leaf_path(0);
  const auto& p2 = h.leaf_path(1);
  EXPECT_EQ(beta(0, 1) - beta(0, 0), s.coef(0, p2[1]) - s.coef(0, p1[1]));
}

TEST(TreeMnl, LeafProbabilityIsPathProduct) {
  // root picks {1,2} with 0.6, node {1,2} picks class 1 with 0.5 -> P(1) = 0.30
  auto h = hierarchies::four_class();
  ModelState s;
  s.kind = ModelKind::tree_mnl;
  s.alpha = Eigen::VectorXd::Zero(6);
  s.coef = Eigen::MatrixXd::Zero(1, 6);
  s.tau = Eigen::VectorXd::Ones(3);
  const int root_to_12 = h.leaf_path(0)[0];
  s.alpha(root_to_12) = std::log(0.6 / 0.4);
  Eigen::VectorXd pr = class_probs(s, h, Eigen::VectorXd::Zero(1));
  EXPECT_NEAR(pr(0), 0.30, 1e-15);
  EXPECT_NEAR(pr(1), 0.30, 1e-15);
  EXPECT_NEAR(pr(2), 0.20, 1e-15);
  EXPECT_NEAR(pr(3), 0.20, 1e-15);
}

TEST(Models, ProbabilitiesMatchOracle) {
  RngStream rng(11);
  for (const auto& h : {hierarchies::four_class(), hierarchies::eight_class(), parse_hierarchy("((a,b),(c,(d,e)),f)")}) {
    for (ModelKind k : all_model_kinds) {
      ModelState s = random_state(k, h, 3, rng);
      Dataset d = make_data(h, 8, 3, rng);
      Eigen::MatrixXd P = class_prob_matrix(s, h, d.X);
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        auto ref = oracle::class_probs(s, h, d.X.row(i).transpose());
        Eigen::VectorXd one = class_probs(s, h, d.X.row(i).transpose());
        for (std::size_t j = 0; j < ref.size(); ++j) {
          EXPECT_NEAR(P(i, static_cast<Eigen::Index>(j)), static_cast<double>(ref[j]), 1e-13);
          EXPECT_NEAR(one(static_cast<Eigen::Index>(j)), static_cast<double>(ref[j]), 1e-13);
        }
        EXPECT_NEAR(P.row(i).sum(), 1.0, 1e-12);
      }
      EXPECT_NEAR(log_likelihood(s, h, d), static_cast<double>(oracle::log_likelihood(s, h, d.X, d.y)), 1e-11);
    }
  }
}

TEST(Models, FlatTreeMnlEqualsMnl) {
  RngStream rng(5);
  auto h = hierarchies::flat(5);
  for (int t = 0; t < 20; ++t) {
    ModelState tree = random_state(ModelKind::tree_mnl, h, 3, rng, 2.0);
    ModelState mnl = tree;
    mnl.kind = ModelKind::mnl;
    Dataset d = make_data(h, 30, 3, rng);
    EXPECT_NEAR(log_likelihood(tree, h, d), log_likelihood(mnl, h, d), 1e-12);
    EXPECT_LT((class_prob_matrix(tree, h, d.X) - class_prob_matrix(mnl, h, d.X)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Models, CorMnlWithZeroInternalBranchesEqualsMnl) {
  RngStream rng(6);
  auto h = hierarchies::eight_class();
  for (int t = 0; t < 20; ++t) {
    ModelState cor = random_state(ModelKind::cor_mnl, h, 4, rng, 1.5);
    ModelState mnl = random_state(ModelKind::mnl, h, 4, rng);
    mnl.alpha = cor.alpha;
    for (std::size_t b = 0; b < h.num_branches(); ++b) {
      const Branch& br = h.branch(static_cast<int>(b));
      if (br.leaf < 0)
        cor.coef.col(static_cast<Eigen::Index>(b)).setZero();
      else
        mnl.coef.col(br.leaf) = cor.coef.col(static_cast<Eigen::Index>(b));
    }
    Dataset d = make_data(h, 40, 4, rng);
    EXPECT_NEAR(log_likelihood(cor, h, d), log_likelihood(mnl, h, d), 1e-12);
  }
}

TEST(Models, FlatCorMnlIsMnl) {
  RngStream rng(8);
  auto h = hierarchies::flat(4);
  ModelState cor = random_state(ModelKind::cor_mnl, h, 2, rng);
  ModelState mnl = cor;
  mnl.kind = ModelKind::mnl;
  Dataset d = make_data(h, 25, 2, rng);
  EXPECT_NEAR(log_likelihood(cor, h, d), log_likelihood(mnl, h, d), 1e-12);
}

TEST(Models, LayoutErrors) {
  auto h = hierarchies::four_class();
  RngStream rng(1);
  ModelState s = random_state(ModelKind::cor_mnl, h, 2, rng);
  s.coef.conservativeResize(2, 4);
  EXPECT_THROW(class_probs(s, h, Eigen::VectorXd::Zero(2)), ModelError);
  ModelState t = random_state(ModelKind::mnl, h, 2, rng);
  EXPECT_THROW(class_probs(t, h, Eigen::VectorXd::Zero(3)), ModelError);
  Dataset bad(Eigen::MatrixXd::Zero(1, 2), {7});
  EXPECT_THROW(log_likelihood(t, h, bad), ModelError);
}

TEST(Models, PriorLayout) {
  auto h = hierarchies::eight_class();
  std::vector<GammaPrior> levels{{1, 5}, {1, 20}, {1, 100}};
  PriorSet ps = make_priors(ModelKind::cor_mnl, h, {1, 10}, {1, 1}, levels);
  ASSERT_EQ(ps.coef.size(), h.num_nodes());
  for (std::size_t m = 0; m < h.num_nodes(); ++m)
    EXPECT_EQ(ps.coef[m], levels[static_cast<std::size_t>(h.node_level(static_cast<int>(m)))]);
  ModelState s = initial_state(ModelKind::cor_mnl, h, 4, ps);
  EXPECT_EQ(s.coef.cols(), 12);
  EXPECT_EQ(s.alpha.size(), 8);
  EXPECT_NEAR(s.tau0, GammaPrior(1, 10).tau_median(), 1e-15);
  EXPECT_EQ(make_priors(ModelKind::mnl, h, {1, 10}, {1, 1}, levels).coef.size(), 1u);
  EXPECT_THROW(make_priors(ModelKind::tree_mnl, h, {1, 10}, {1, 1}, {}), ModelError);
}

// Gradient of the log-posterior against central differences of an
// independent long-double implementation.
TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937 gen(2024);
  RngStream rng(99);
  const std::vector<ClassHierarchy> trees{hierarchies::four_class(), hierarchies::eight_class(),
                                          parse_hierarchy("((a,b),c)"), hierarchies::flat(3)};
  for (ModelKind k : all_model_kinds) {
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
      const auto& h = trees[static_cast<std::size_t>(inst) % trees.size()];
      const int n = 1 + static_cast<int>(gen() % 10);
      const Eigen::Index p = 1 + static_cast<Eigen::Index>(gen() % 4);
      ModelState s = random_state(k, h, p, rng, 0.7);
      if (inst % 2) {
        s.ard.resize(p);
        for (auto& v : s.ard) v = 0.5 + rng.uniform();
      }
      Dataset d = make_data(h, n, p, rng);
      auto [value, grad] = log_posterior_and_gradient(s, h, d);
      EXPECT_NEAR(value, static_cast<double>(oracle::log_posterior(s, h, d.X, d.y)), 1e-10);
      Eigen::VectorXd fd = oracle::fd_gradient(s, h, d.X, d.y, 1e-5);
      ASSERT_EQ(fd.size(), grad.size());
      for (Eigen::Index i = 0; i < fd.size(); ++i) {
        double rel = std::abs(grad(i) - fd(i)) / std::max(1.0, std::abs(fd(i)));
        worst = std::max(worst, rel);
      }
    }
    EXPECT_LT(worst, 1e-5) << display_name(k);
  }
}

TEST(Gradient, NoDataLeavesOnlyPrior) {
  auto h = hierarchies::four_class();
  RngStream rng(4);
  ModelState s = random_state(ModelKind::cor_mnl, h, 2, rng);
  Dataset empty(Eigen::MatrixXd(0, 2), {});
  auto [value, grad] = log_posterior_and_gradient(s, h, empty);
  Eigen::VectorXd q = pack_location(s);
  for (Eigen::Index i = 0; i < s.alpha.size(); ++i) EXPECT_NEAR(grad(i), -q(i) / (s.tau0 * s.tau0), 1e-14);
  EXPECT_NEAR(value, static_cast<double>(oracle::log_posterior(s, h, empty.X, empty.y)), 1e-12);
}

TEST(Location, PackRoundTrip) {
  auto h = hierarchies::eight_class();
  RngStream rng(2);
  ModelState s = random_state(ModelKind::tree_mnl, h, 3, rng);
  ModelState t = s;
  t.alpha.setZero();
  t.coef.setZero();
  unpack_location(pack_location(s), t);
  EXPECT_EQ(t.alpha, s.alpha);
  EXPECT_EQ(t.coef, s.coef);
}

TEST(Prior, TauPercentiles) {
  struct Row {
    GammaPrior g;
    double lo, mid, hi;
  };
  // exact values from inverse regularized incomplete gamma, computed offline
  const Row rows[] = {{{1, 10}, 0.1646, 0.3798, 1.9874}, {{1, 1}, 0.5207, 1.2011, 6.2847},
                      {{1, 5}, 0.2328, 0.5372, 2.8106},  {{1, 20}, 0.1164, 0.2686, 1.4053},
                      {{1, 100}, 0.0521, 0.1201, 0.6285}, {{0.5, 20}, 0.1411, 0.4688, 10.0909},
                      {{0.5, 1}, 0.6310, 2.0967, 45.1278}, {{0.5, 100}, 0.0631, 0.2097, 4.5128}};
  for (const auto& r : rows) {
    auto q = gamma_tau_percentiles(r.g);
    EXPECT_NEAR(q[0], r.lo, 1e-4) << to_string(r.g);
    EXPECT_NEAR(q[1], r.mid, 1e-4) << to_string(r.g);
    EXPECT_NEAR(q[2], r.hi, 1e-4) << to_string(r.g);
    EXPECT_NEAR(r.g.tau_median(), q[1], 1e-12);
  }
}

TEST(Prior, ExponentialCaseClosedForm) {
  // shape 1: lambda ~ Exp(mean b), P(tau <= t) = exp(-1/(b t^2))
  for (double b : {1.0, 5.0, 20.0}) {
    auto q = gamma_tau_percentiles(GammaPrior(1, b));
    const double levels[] = {0.025, 0.5, 0.975};
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::exp(-1.0 / (b * q[i] * q[i])), levels[i], 1e-12);
  }
}

TEST(Prior, Validation) {
  EXPECT_THROW(GammaPrior(0, 1), std::invalid_argument);
  EXPECT_THROW(GammaPrior(1, -2), std::invalid_argument);
  GammaPrior g(2, 3);
  EXPECT_DOUBLE_EQ(g.mean(), 6.0);
  EXPECT_EQ(to_string(GammaPrior(0.5, 100)), "Gamma(0.5,100)");
  std::vector<double> bad{0.0};
  EXPECT_THROW(gamma_tau_percentiles(g, bad), std::invalid_argument);
}
