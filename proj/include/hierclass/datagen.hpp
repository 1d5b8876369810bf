#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hierclass/dataset.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/models.hpp"
#include "hierclass/rng.hpp"

namespace hierclass {

/// Synthetic-data protocol: covariates i.i.d. uniform(low, high), parameters
/// drawn from the generator model's prior, labels drawn from that model.
/// The first n_train cases form the training split, the rest the test split.
struct SimSpec {
  ModelKind generator = ModelKind::mnl;
  ClassHierarchy hierarchy = hierarchies::four_class();
  int num_features = 2;
  double low = -5.0;
  double high = 5.0;
  int n_total = 10000;
  int n_train = 100;
  PriorSet priors;  // generator's priors
  int replications = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_features < 1) throw DataError("SimSpec: need at least one covariate");
    if (!(high > low)) throw DataError("SimSpec: covariate range is empty");
    if (n_train < 0 || n_train >= n_total) throw DataError("SimSpec: need 0 <= n_train < n_total");
    if (replications < 1) throw DataError("SimSpec: need at least one replication");
    check_priors(generator, hierarchy, priors);
  }
};

struct Replication {
  Dataset train;
  Dataset test;
  ModelState truth;
};

/// Precision-scale draws tau = lambda^-1/2 with lambda ~ Gamma(a, b), then
/// location parameters from their normal priors.
inline ModelState draw_from_prior(ModelKind kind, const ClassHierarchy& h, Eigen::Index p, const PriorSet& priors,
                                  RngStream& rng) {
  check_priors(kind, h, priors);
  auto draw_tau = [&](const GammaPrior& g) { return 1.0 / std::sqrt(rng.gamma(g.shape, g.scale)); };
  ModelState s;
  s.kind = kind;
  s.tau0 = draw_tau(priors.intercept);
  s.tau.resize(num_tau(kind, h));
  for (Eigen::Index m = 0; m < s.tau.size(); ++m) s.tau(m) = draw_tau(priors.coef[static_cast<std::size_t>(m)]);
  if (priors.ard) {
    s.ard.resize(p);
    for (Eigen::Index l = 0; l < p; ++l) s.ard(l) = draw_tau(*priors.ard);
  }
  s.alpha.resize(num_intercepts(kind, h));
  for (Eigen::Index j = 0; j < s.alpha.size(); ++j) s.alpha(j) = rng.normal(0.0, s.tau0);
  s.coef.resize(p, num_columns(kind, h));
  for (Eigen::Index col = 0; col < s.coef.cols(); ++col)
    for (Eigen::Index l = 0; l < p; ++l) s.coef(l, col) = rng.normal(0.0, coef_sd(s, h, l, col));
  return s;
}

/// Draws one label per row of X. Flat models sample the class directly from
/// the multinomial; treeMNL descends the tree, sampling one child per node.
inline std::vector<int> draw_labels(const ModelState& s, const ClassHierarchy& h, const Eigen::MatrixXd& X,
                                    RngStream& rng) {
  check_layout(s, h);
  std::vector<int> y(static_cast<std::size_t>(X.rows()));
  if (s.kind != ModelKind::tree_mnl) {
    Eigen::MatrixXd probs = class_prob_matrix(s, h, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      Eigen::VectorXd row = probs.row(i).transpose();
      y[static_cast<std::size_t>(i)] = rng.categorical({row.data(), static_cast<std::size_t>(row.size())});
    }
    return y;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int node = 0;
    for (;;) {
      const int fb = h.first_branch(node);
      const int cm = h.num_children(node);
      Eigen::VectorXd pr = softmax_probs(s.alpha.segment(fb, cm), s.coef.middleCols(fb, cm), X.row(i).transpose());
      const Branch& br = h.branch(fb + rng.categorical({pr.data(), static_cast<std::size_t>(cm)}));
      if (br.child_node < 0) {
        y[static_cast<std::size_t>(i)] = br.leaf;
        break;
      }
      node = br.child_node;
    }
  }
  return y;
}

inline Eigen::MatrixXd draw_uniform_covariates(int n, int p, double low, double high, RngStream& rng) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < p; ++l) X(i, l) = rng.uniform(low, high);
  return X;
}

/// Data from fixed generating parameters.
inline Replication generate_from_state(const SimSpec& spec, const ModelState& truth, RngStream& rng) {
  Eigen::MatrixXd X = draw_uniform_covariates(spec.n_total, spec.num_features, spec.low, spec.high, rng);
  std::vector<int> y = draw_labels(truth, spec.hierarchy, X, rng);
  Dataset all(std::move(X), std::move(y));
  for (int l = 0; l < spec.num_features; ++l) all.feature_names.push_back("x" + std::to_string(l + 1));
  return {all.head(static_cast<std::size_t>(spec.n_train)), all.tail_from(static_cast<std::size_t>(spec.n_train)),
          truth};
}

inline Replication generate_replication(const SimSpec& spec, RngStream& rng) {
  spec.validate();
  ModelState truth = draw_from_prior(spec.generator, spec.hierarchy, spec.num_features, spec.priors, rng);
  return generate_from_state(spec, truth, rng);
}

}  // namespace hierclass
