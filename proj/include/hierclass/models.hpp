#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hierclass/dataset.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/prior.hpp"

namespace hierclass {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { mnl, tree_mnl, cor_mnl };

inline constexpr ModelKind all_model_kinds[] = {ModelKind::mnl, ModelKind::tree_mnl, ModelKind::cor_mnl};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mnl: return "mnl";
    case ModelKind::tree_mnl: return "treemnl";
    case ModelKind::cor_mnl: return "cormnl";
  }
  return "?";
}

inline std::string_view display_name(ModelKind k) {
  switch (k) {
    case ModelKind::mnl: return "MNL";
    case ModelKind::tree_mnl: return "treeMNL";
    case ModelKind::cor_mnl: return "corMNL";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (ModelKind k : all_model_kinds)
    if (s == to_string(k)) return k;
  throw ModelError("unknown model '" + std::string(s) + "' (expected mnl, treemnl or cormnl)");
}

/// Parameters of one model draw.
///
/// Column meaning of `coef` (p rows) and entries of `alpha`:
///   mnl      alpha: c class intercepts   coef: c class vectors beta_j
///   cor_mnl  alpha: c class intercepts   coef: B branch vectors phi_b
///   tree_mnl alpha: B branch intercepts  coef: B branch vectors beta_mk
/// `tau` holds one sd for mnl and one per internal node otherwise. `ard`
/// is empty, or holds one relevance scale per covariate.
struct ModelState {
  ModelKind kind = ModelKind::mnl;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd coef;
  double tau0 = 1.0;
  Eigen::VectorXd tau;
  Eigen::VectorXd ard;

  bool has_ard() const noexcept { return ard.size() > 0; }
  Eigen::Index num_features() const noexcept { return coef.rows(); }
  Eigen::Index num_location() const noexcept { return alpha.size() + coef.size(); }
};

/// Hyperpriors on precisions. `coef` has one entry for mnl and one per
/// internal node otherwise.
struct PriorSet {
  GammaPrior intercept;
  std::vector<GammaPrior> coef;
  std::optional<GammaPrior> ard;
};

inline Eigen::Index num_columns(ModelKind k, const ClassHierarchy& h) {
  return static_cast<Eigen::Index>(k == ModelKind::mnl ? h.num_classes() : h.num_branches());
}

inline Eigen::Index num_intercepts(ModelKind k, const ClassHierarchy& h) {
  return static_cast<Eigen::Index>(k == ModelKind::tree_mnl ? h.num_branches() : h.num_classes());
}

inline Eigen::Index num_tau(ModelKind k, const ClassHierarchy& h) {
  return static_cast<Eigen::Index>(k == ModelKind::mnl ? 1 : h.num_nodes());
}

/// Index into ModelState::tau governing coefficient column `col`.
inline int tau_slot(ModelKind k, const ClassHierarchy& h, Eigen::Index col) {
  return k == ModelKind::mnl ? 0 : h.branch(static_cast<int>(col)).parent;
}

inline void check_layout(const ModelState& s, const ClassHierarchy& h) {
  if (s.alpha.size() != num_intercepts(s.kind, h) || s.coef.cols() != num_columns(s.kind, h) ||
      s.tau.size() != num_tau(s.kind, h))
    throw ModelError(std::string(display_name(s.kind)) + " state does not match hierarchy " + h.to_string());
  if (s.has_ard() && s.ard.size() != s.coef.rows()) throw ModelError("ARD scale count differs from covariate count");
}

inline void check_priors(ModelKind k, const ClassHierarchy& h, const PriorSet& priors) {
  if (static_cast<Eigen::Index>(priors.coef.size()) != num_tau(k, h))
    throw ModelError("prior set has " + std::to_string(priors.coef.size()) + " coefficient priors, " +
                     std::string(display_name(k)) + " needs " + std::to_string(num_tau(k, h)));
}

/// Builds a prior set: `mnl_coef` for the flat model, otherwise the prior of
/// internal node m is by_level[min(level(m), size-1)].
inline PriorSet make_priors(ModelKind k, const ClassHierarchy& h, GammaPrior intercept, GammaPrior mnl_coef,
                            std::span<const GammaPrior> by_level, std::optional<GammaPrior> ard = std::nullopt) {
  PriorSet ps{intercept, {}, ard};
  if (k == ModelKind::mnl) {
    ps.coef.push_back(mnl_coef);
  } else {
    if (by_level.empty()) throw ModelError("hierarchical model needs per-level priors");
    for (std::size_t m = 0; m < h.num_nodes(); ++m) {
      std::size_t lvl = std::min<std::size_t>(static_cast<std::size_t>(h.node_level(static_cast<int>(m))),
                                              by_level.size() - 1);
      ps.coef.push_back(by_level[lvl]);
    }
  }
  return ps;
}

/// All location parameters zero, every sd at its prior median.
inline ModelState initial_state(ModelKind k, const ClassHierarchy& h, Eigen::Index p, const PriorSet& priors) {
  check_priors(k, h, priors);
  ModelState s;
  s.kind = k;
  s.alpha = Eigen::VectorXd::Zero(num_intercepts(k, h));
  s.coef = Eigen::MatrixXd::Zero(p, num_columns(k, h));
  s.tau0 = priors.intercept.tau_median();
  s.tau.resize(num_tau(k, h));
  for (Eigen::Index m = 0; m < s.tau.size(); ++m) s.tau(m) = priors.coef[static_cast<std::size_t>(m)].tau_median();
  if (priors.ard) s.ard = Eigen::VectorXd::Constant(p, priors.ard->tau_median());
  return s;
}

/// Prior sd of coef(l, col).
inline double coef_sd(const ModelState& s, const ClassHierarchy& h, Eigen::Index l, Eigen::Index col) {
  double sd = s.tau(tau_slot(s.kind, h, col));
  return s.has_ard() ? sd * s.ard(l) : sd;
}

// ---------------------------------------------------------------------------
// Softmax and class probabilities

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  double mx = v.maxCoeff();
  return mx + std::log((v.array() - mx).exp().sum());
}

/// exp(alpha_j + x beta_j) / sum_k exp(alpha_k + x beta_k), computed with the
/// maximum logit subtracted.
inline Eigen::VectorXd softmax_probs(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                     const Eigen::Ref<const Eigen::MatrixXd>& beta,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (beta.cols() != alpha.size() || beta.rows() != x.size())
    throw ModelError("softmax_probs: dimension mismatch");
  if (!alpha.allFinite() || !beta.allFinite() || !x.allFinite()) throw ModelError("softmax_probs: non-finite input");
  Eigen::VectorXd logits = alpha + beta.transpose() * x;
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

/// Row-wise softmax in place.
inline void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

/// B x c incidence matrix: entry (b, j) is 1 when branch b lies on the path to class j.
inline Eigen::MatrixXd path_matrix(const ClassHierarchy& h) {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.num_branches()),
                                            static_cast<Eigen::Index>(h.num_classes()));
  for (std::size_t j = 0; j < h.num_classes(); ++j)
    for (int b : h.leaf_path(static_cast<int>(j))) P(b, static_cast<Eigen::Index>(j)) = 1.0;
  return P;
}

/// Class coefficient vectors implied by branch vectors: column j is the sum
/// of coef columns along the path to class j.
inline Eigen::MatrixXd cormnl_effective_beta(const ModelState& s, const ClassHierarchy& h) {
  if (s.kind != ModelKind::cor_mnl) throw ModelError("cormnl_effective_beta: state is not corMNL");
  check_layout(s, h);
  return s.coef * path_matrix(h);
}

/// Leaf probabilities of a nested model: product of node-level softmax
/// terms along each leaf path.
inline Eigen::VectorXd treemnl_leaf_probs(const ModelState& s, const ClassHierarchy& h,
                                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (s.kind != ModelKind::tree_mnl) throw ModelError("treemnl_leaf_probs: state is not treeMNL");
  check_layout(s, h);
  if (x.size() != s.coef.rows()) throw ModelError("treemnl_leaf_probs: dimension mismatch");
  Eigen::VectorXd branch_prob(static_cast<Eigen::Index>(h.num_branches()));
  for (std::size_t m = 0; m < h.num_nodes(); ++m) {
    int fb = h.first_branch(static_cast<int>(m));
    int cm = h.num_children(static_cast<int>(m));
    branch_prob.segment(fb, cm) = softmax_probs(s.alpha.segment(fb, cm), s.coef.middleCols(fb, cm), x);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(h.num_classes()));
  for (std::size_t j = 0; j < h.num_classes(); ++j) {
    double pr = 1.0;
    for (int b : h.leaf_path(static_cast<int>(j))) pr *= branch_prob(b);
    out(static_cast<Eigen::Index>(j)) = pr;
  }
  return out;
}

/// Predictive class probabilities of one parameter draw at x.
inline Eigen::VectorXd class_probs(const ModelState& s, const ClassHierarchy& h,
                                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  switch (s.kind) {
    case ModelKind::mnl: check_layout(s, h); return softmax_probs(s.alpha, s.coef, x);
    case ModelKind::cor_mnl: return softmax_probs(s.alpha, cormnl_effective_beta(s, h), x);
    case ModelKind::tree_mnl: return treemnl_leaf_probs(s, h, x);
  }
  throw ModelError("unknown model kind");
}

/// n x c matrix of class probabilities for every row of X.
inline Eigen::MatrixXd class_prob_matrix(const ModelState& s, const ClassHierarchy& h, const Eigen::MatrixXd& X) {
  check_layout(s, h);
  if (X.cols() != s.coef.rows()) throw ModelError("class_prob_matrix: dimension mismatch");
  if (s.kind != ModelKind::tree_mnl) {
    Eigen::MatrixXd logits =
        s.kind == ModelKind::mnl ? Eigen::MatrixXd(X * s.coef) : Eigen::MatrixXd(X * (s.coef * path_matrix(h)));
    logits.rowwise() += s.alpha.transpose();
    softmax_rows(logits);
    return logits;
  }
  Eigen::MatrixXd branch = X * s.coef;
  branch.rowwise() += s.alpha.transpose();
  for (std::size_t m = 0; m < h.num_nodes(); ++m) {
    int fb = h.first_branch(static_cast<int>(m));
    int cm = h.num_children(static_cast<int>(m));
    Eigen::MatrixXd block = branch.middleCols(fb, cm);
    softmax_rows(block);
    branch.middleCols(fb, cm) = block;
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(X.rows(), static_cast<Eigen::Index>(h.num_classes()));
  for (std::size_t j = 0; j < h.num_classes(); ++j)
    for (int b : h.leaf_path(static_cast<int>(j))) out.col(static_cast<Eigen::Index>(j)).array() *= branch.col(b).array();
  return out;
}

// ---------------------------------------------------------------------------
// Likelihood and posterior

/// Cases routed through each internal node, with the child slot each case
/// takes there. A nested model at node m sees exactly these cases.
struct NodeRouting {
  std::vector<std::vector<int>> cases;
  std::vector<std::vector<int>> slots;

  NodeRouting(const ClassHierarchy& h, std::span<const int> y)
      : cases(h.num_nodes()), slots(h.num_nodes()) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= h.num_classes())
        throw ModelError("label index " + std::to_string(y[i]) + " outside hierarchy");
      for (int b : h.leaf_path(y[i])) {
        const Branch& br = h.branch(b);
        cases[br.parent].push_back(static_cast<int>(i));
        slots[br.parent].push_back(br.slot);
      }
    }
  }
};

/// Multinomial-logit log-likelihood sum_i log softmax(alpha + x_i beta)[y_i].
/// When `resid` is given it receives onehot(y) - probs (n x c), the
/// derivative of the log-likelihood with respect to the logits.
inline double mnl_log_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y,
                                 const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                 const Eigen::Ref<const Eigen::MatrixXd>& beta, Eigen::MatrixXd* resid = nullptr) {
  const Eigen::Index n = X.rows();
  if (n == 0) {
    if (resid) resid->setZero(0, alpha.size());
    return 0.0;
  }
  Eigen::MatrixXd logits = X * beta;
  logits.rowwise() += alpha.transpose();
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = logits.row(i);
    double mx = row.maxCoeff();
    double target = row(y[i]) - mx;
    row.array() = (row.array() - mx).exp();
    double z = row.sum();
    ll += target - std::log(z);
    if (resid) row /= -z;
  }
  if (resid) {
    *resid = std::move(logits);
    for (Eigen::Index i = 0; i < n; ++i) (*resid)(i, y[i]) += 1.0;
  }
  return ll;
}

/// sum_i log P(y_i | x_i, state).
inline double log_likelihood(const ModelState& s, const ClassHierarchy& h, const Dataset& data) {
  check_layout(s, h);
  if (data.X.cols() != s.coef.rows() && !data.empty()) throw ModelError("log_likelihood: dimension mismatch");
  for (int yi : data.y)
    if (yi < 0 || static_cast<std::size_t>(yi) >= h.num_classes()) throw ModelError("log_likelihood: unknown label");
  double ll = 0.0;
  switch (s.kind) {
    case ModelKind::mnl: ll = mnl_log_likelihood(data.X, data.y, s.alpha, s.coef); break;
    case ModelKind::cor_mnl: ll = mnl_log_likelihood(data.X, data.y, s.alpha, s.coef * path_matrix(h)); break;
    case ModelKind::tree_mnl: {
      NodeRouting route(h, data.y);
      for (std::size_t m = 0; m < h.num_nodes(); ++m) {
        if (route.cases[m].empty()) continue;
        Eigen::MatrixXd Xm = data.X(route.cases[m], Eigen::all);
        int fb = h.first_branch(static_cast<int>(m));
        int cm = h.num_children(static_cast<int>(m));
        ll += mnl_log_likelihood(Xm, route.slots[m], s.alpha.segment(fb, cm), s.coef.middleCols(fb, cm));
      }
      break;
    }
  }
  if (!std::isfinite(ll)) throw ModelError("log_likelihood: non-finite value");
  return ll;
}

/// Location parameters flattened as [alpha; coef column-major].
inline Eigen::VectorXd pack_location(const ModelState& s) {
  Eigen::VectorXd v(s.num_location());
  v.head(s.alpha.size()) = s.alpha;
  v.tail(s.coef.size()) = Eigen::Map<const Eigen::VectorXd>(s.coef.data(), s.coef.size());
  return v;
}

inline void unpack_location(const Eigen::Ref<const Eigen::VectorXd>& v, ModelState& s) {
  if (v.size() != s.num_location()) throw ModelError("unpack_location: size mismatch");
  s.alpha = v.head(s.alpha.size());
  Eigen::Map<Eigen::VectorXd>(s.coef.data(), s.coef.size()) = v.tail(s.coef.size());
}

inline constexpr double log_sqrt_2pi = 0.91893853320467274178;

/// Log-posterior of the location parameters given the sds held in a state,
/// with its gradient. Precomputes routing and path structure once so that
/// repeated evaluation (HMC trajectories) is cheap.
class LocationPosterior {
 public:
  LocationPosterior(ModelKind kind, const ClassHierarchy& h, const Dataset& data)
      : kind_(kind), h_(&h), data_(&data), route_(h, data.y) {
    if (kind == ModelKind::cor_mnl) path_ = path_matrix(h);
    if (kind == ModelKind::tree_mnl) {
      node_X_.resize(h.num_nodes());
      for (std::size_t m = 0; m < h.num_nodes(); ++m)
        node_X_[m] = route_.cases[m].empty() ? Eigen::MatrixXd(0, data.X.cols())
                                             : Eigen::MatrixXd(data.X(route_.cases[m], Eigen::all));
    }
  }

  ModelKind kind() const noexcept { return kind_; }
  const ClassHierarchy& hierarchy() const noexcept { return *h_; }
  const Dataset& data() const noexcept { return *data_; }
  const NodeRouting& routing() const noexcept { return route_; }
  const Eigen::MatrixXd& node_covariates(int m) const { return node_X_.at(m); }
  const Eigen::MatrixXd& paths() const noexcept { return path_; }

  /// Log-posterior (likelihood plus normalized Gaussian log-priors) of the
  /// location parameters in `s`; `grad`, when given, is laid out like
  /// pack_location.
  double value_and_gradient(const ModelState& s, Eigen::VectorXd* grad) const {
    check_layout(s, *h_);
    if (grad) grad->resize(s.num_location());
    double lp = 0.0;
    const Eigen::Index na = s.alpha.size();
    if (kind_ == ModelKind::tree_mnl) {
      for (std::size_t m = 0; m < h_->num_nodes(); ++m) {
        int fb = h_->first_branch(static_cast<int>(m));
        int cm = h_->num_children(static_cast<int>(m));
        Eigen::VectorXd g;
        lp += node_value(s, static_cast<int>(m), s.alpha.segment(fb, cm), s.coef.middleCols(fb, cm), grad ? &g : nullptr);
        if (grad) {
          grad->segment(fb, cm) = g.head(cm);
          for (int k = 0; k < cm; ++k)
            grad->segment(na + (fb + k) * s.coef.rows(), s.coef.rows()) = g.segment(cm + k * s.coef.rows(), s.coef.rows());
        }
      }
    } else {
      Eigen::MatrixXd resid;
      const Eigen::MatrixXd beta = kind_ == ModelKind::mnl ? s.coef : Eigen::MatrixXd(s.coef * path_);
      lp += mnl_log_likelihood(data_->X, data_->y, s.alpha, beta, grad ? &resid : nullptr);
      for (Eigen::Index j = 0; j < na; ++j) {
        double a = s.alpha(j);
        lp += -0.5 * (a / s.tau0) * (a / s.tau0) - std::log(s.tau0) - log_sqrt_2pi;
        if (grad) (*grad)(j) = (resid.rows() ? resid.col(j).sum() : 0.0) - a / (s.tau0 * s.tau0);
      }
      Eigen::MatrixXd gc;
      if (grad) {
        if (data_->empty())
          gc = Eigen::MatrixXd::Zero(s.coef.rows(), s.coef.cols());
        else
          gc = kind_ == ModelKind::mnl ? Eigen::MatrixXd(data_->X.transpose() * resid)
                                       : Eigen::MatrixXd(data_->X.transpose() * resid * path_.transpose());
      }
      for (Eigen::Index col = 0; col < s.coef.cols(); ++col) {
        for (Eigen::Index l = 0; l < s.coef.rows(); ++l) {
          double sd = coef_sd(s, *h_, l, col);
          double v = s.coef(l, col);
          lp += -0.5 * (v / sd) * (v / sd) - std::log(sd) - log_sqrt_2pi;
          if (grad) gc(l, col) -= v / (sd * sd);
        }
      }
      if (grad) grad->tail(s.coef.size()) = Eigen::Map<const Eigen::VectorXd>(gc.data(), gc.size());
    }
    if (!std::isfinite(lp)) throw ModelError("log posterior is not finite");
    if (grad && !grad->allFinite()) throw ModelError("log posterior gradient is not finite");
    return lp;
  }

  /// Log-posterior of the nested model at internal node m, as a function of
  /// that node's intercepts and coefficient columns only. `grad` is laid
  /// out as [alpha_m; vec(beta_m)].
  double node_value(const ModelState& s, int m, const Eigen::Ref<const Eigen::VectorXd>& alpha_m,
                    const Eigen::Ref<const Eigen::MatrixXd>& beta_m, Eigen::VectorXd* grad) const {
    const int fb = h_->first_branch(m);
    const int cm = h_->num_children(m);
    const Eigen::Index p = beta_m.rows();
    Eigen::MatrixXd resid;
    double lp = mnl_log_likelihood(node_X_[m], route_.slots[m], alpha_m, beta_m, grad ? &resid : nullptr);
    if (grad) grad->resize(cm + p * cm);
    for (int k = 0; k < cm; ++k) {
      double a = alpha_m(k);
      lp += -0.5 * (a / s.tau0) * (a / s.tau0) - std::log(s.tau0) - log_sqrt_2pi;
      if (grad) (*grad)(k) = (resid.rows() ? resid.col(k).sum() : 0.0) - a / (s.tau0 * s.tau0);
    }
    Eigen::MatrixXd gb;
    if (grad) gb = resid.rows() ? Eigen::MatrixXd(node_X_[m].transpose() * resid) : Eigen::MatrixXd::Zero(p, cm);
    for (int k = 0; k < cm; ++k) {
      for (Eigen::Index l = 0; l < p; ++l) {
        double sd = coef_sd(s, *h_, l, fb + k);
        double v = beta_m(l, k);
        lp += -0.5 * (v / sd) * (v / sd) - std::log(sd) - log_sqrt_2pi;
        if (grad) gb(l, k) -= v / (sd * sd);
      }
    }
    if (grad) grad->tail(p * cm) = Eigen::Map<const Eigen::VectorXd>(gb.data(), gb.size());
    return lp;
  }

 private:
  ModelKind kind_;
  const ClassHierarchy* h_;
  const Dataset* data_;
  NodeRouting route_;
  Eigen::MatrixXd path_;
  std::vector<Eigen::MatrixXd> node_X_;
};

/// Log-posterior of the location parameters (sds fixed at the values held
/// in the state) and its gradient, laid out like pack_location.
inline std::pair<double, Eigen::VectorXd> log_posterior_and_gradient(const ModelState& s, const ClassHierarchy& h,
                                                                     const Dataset& data) {
  LocationPosterior post(s.kind, h, data);
  Eigen::VectorXd g;
  double v = post.value_and_gradient(s, &g);
  return {v, std::move(g)};
}

}  // namespace hierclass
