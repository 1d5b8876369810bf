#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hierclass/dataset.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/models.hpp"
#include "hierclass/rng.hpp"
#include "hierclass/samplers.hpp"

namespace hierclass {

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CoefKernel { slice, hmc };
enum class HyperKernel { gibbs, slice };

inline std::string_view to_string(CoefKernel k) { return k == CoefKernel::slice ? "slice" : "hmc"; }
inline std::string_view to_string(HyperKernel k) { return k == HyperKernel::gibbs ? "gibbs" : "slice"; }

inline CoefKernel parse_coef_kernel(std::string_view s) {
  if (s == "slice") return CoefKernel::slice;
  if (s == "hmc") return CoefKernel::hmc;
  throw InferenceError("unknown coefficient kernel '" + std::string(s) + "' (expected slice or hmc)");
}

inline HyperKernel parse_hyper_kernel(std::string_view s) {
  if (s == "gibbs") return HyperKernel::gibbs;
  if (s == "slice") return HyperKernel::slice;
  throw InferenceError("unknown hyperparameter kernel '" + std::string(s) + "' (expected gibbs or slice)");
}

/// One iteration = one coefficient update (an HMC trajectory per parameter
/// block, or a full single-variable slice sweep) followed by one pass over
/// every sd hyperparameter.
struct FitConfig {
  int iterations = 1000;
  int burn_in = 250;
  CoefKernel coef_kernel = CoefKernel::slice;
  HyperKernel hyper_kernel = HyperKernel::gibbs;
  HmcConfig hmc;
  SliceConfig slice;
  SliceConfig hyper_slice;
  std::uint64_t seed = 1;
  int threads = 1;  // treeMNL node models may be updated concurrently

  void validate() const {
    if (iterations < 1) throw InferenceError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw InferenceError("burn_in must satisfy 0 <= burn_in < iterations");
    if (threads < 1) throw InferenceError("threads must be positive");
    hmc.validate();
    slice.validate();
    hyper_slice.validate();
  }
};

struct IterationDiagnostics {
  int iteration = 0;
  double train_log_likelihood = 0.0;
  double tau0 = 0.0;
  Eigen::VectorXd tau;
  Eigen::VectorXd ard;
  double hmc_acceptance = std::numeric_limits<double>::quiet_NaN();  // fraction of accepted trajectories
};

/// Retained draws after burn-in, with diagnostics aligned one-to-one.
struct PosteriorChain {
  ModelKind kind = ModelKind::mnl;
  std::string hierarchy;
  Eigen::Index num_features = 0;
  FitConfig config;
  std::vector<ModelState> draws;
  std::vector<IterationDiagnostics> diagnostics;

  std::size_t size() const noexcept { return draws.size(); }
  bool empty() const noexcept { return draws.empty(); }

  double mean_hmc_acceptance() const {
    double s = 0.0;
    int n = 0;
    for (const auto& d : diagnostics)
      if (!std::isnan(d.hmc_acceptance)) {
        s += d.hmc_acceptance;
        ++n;
      }
    return n ? s / n : std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

/// Single-variable slice sweeps over location parameters with cached
/// logits. Each scalar shifts a fixed set of logit columns by
/// delta * x_l (or delta, for intercepts), so a density evaluation costs
/// one pass over the cached block.
class CoordinateSlicer {
 public:
  explicit CoordinateSlicer(const LocationPosterior& post) : post_(&post) {
    const auto& h = post.hierarchy();
    if (post.kind() == ModelKind::tree_mnl) {
      for (std::size_t m = 0; m < h.num_nodes(); ++m)
        blocks_.push_back({&post.node_covariates(static_cast<int>(m)), &post.routing().slots[m], {}});
    } else {
      blocks_.push_back({&post.data().X, &post.data().y, {}});
    }
  }

  /// Sweep over every parameter of a flat-logit model (mnl, cor_mnl).
  void sweep(ModelState& s, const SliceConfig& cfg, RngStream& rng) {
    const auto& h = post_->hierarchy();
    Block& blk = blocks_[0];
    refresh(blk, s.alpha, effective_beta(s));
    const Eigen::Index c = s.alpha.size();
    std::vector<int> cols(1);
    for (Eigen::Index j = 0; j < c; ++j) {
      cols[0] = static_cast<int>(j);
      update_scalar(blk, s.alpha(j), s.tau0, -1, cols, cfg, rng);
    }
    for (Eigen::Index col = 0; col < s.coef.cols(); ++col) {
      if (s.kind == ModelKind::cor_mnl)
        cols = h.classes_below(static_cast<int>(col));
      else
        cols.assign(1, static_cast<int>(col));
      for (Eigen::Index l = 0; l < s.coef.rows(); ++l)
        update_scalar(blk, s.coef(l, col), coef_sd(s, h, l, col), static_cast<int>(l), cols, cfg, rng);
    }
  }

  /// Sweep over the parameters of the nested model at node m (tree_mnl).
  void sweep_node(ModelState& s, int m, const SliceConfig& cfg, RngStream& rng) {
    const auto& h = post_->hierarchy();
    Block& blk = blocks_[static_cast<std::size_t>(m)];
    const int fb = h.first_branch(m);
    const int cm = h.num_children(m);
    refresh(blk, s.alpha.segment(fb, cm), s.coef.middleCols(fb, cm));
    std::vector<int> cols(1);
    for (int k = 0; k < cm; ++k) {
      cols[0] = k;
      update_scalar(blk, s.alpha(fb + k), s.tau0, -1, cols, cfg, rng);
    }
    for (int k = 0; k < cm; ++k) {
      cols[0] = k;
      for (Eigen::Index l = 0; l < s.coef.rows(); ++l)
        update_scalar(blk, s.coef(l, fb + k), coef_sd(s, h, l, fb + k), static_cast<int>(l), cols, cfg, rng);
    }
  }

 private:
  struct Block {
    const Eigen::MatrixXd* X;
    const std::vector<int>* y;
    Eigen::MatrixXd logits;
  };

  Eigen::MatrixXd effective_beta(const ModelState& s) const {
    return s.kind == ModelKind::cor_mnl ? Eigen::MatrixXd(s.coef * post_->paths()) : s.coef;
  }

  static void refresh(Block& blk, const Eigen::Ref<const Eigen::VectorXd>& alpha,
                      const Eigen::Ref<const Eigen::MatrixXd>& beta) {
    if (blk.X->rows() == 0) {
      blk.logits.resize(0, alpha.size());
      return;
    }
    blk.logits = *blk.X * beta;
    blk.logits.rowwise() += alpha.transpose();
  }

  // Log-likelihood of the block after adding delta * v to the listed columns.
  static double shifted_log_likelihood(const Block& blk, double delta, int feature, const std::vector<char>& mask) {
    const Eigen::Index n = blk.logits.rows();
    const Eigen::Index c = blk.logits.cols();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double shift = feature < 0 ? delta : delta * (*blk.X)(i, feature);
      double mx = -INFINITY;
      for (Eigen::Index j = 0; j < c; ++j) mx = std::max(mx, blk.logits(i, j) + (mask[j] ? shift : 0.0));
      double z = 0.0;
      for (Eigen::Index j = 0; j < c; ++j) z += std::exp(blk.logits(i, j) + (mask[j] ? shift : 0.0) - mx);
      const int yi = (*blk.y)[static_cast<std::size_t>(i)];
      ll += blk.logits(i, yi) + (mask[yi] ? shift : 0.0) - mx - std::log(z);
    }
    return ll;
  }

  void update_scalar(Block& blk, double& value, double prior_sd, int feature, const std::vector<int>& cols,
                     const SliceConfig& cfg, RngStream& rng) {
    const double x0 = value;
    std::vector<char> mask(static_cast<std::size_t>(blk.logits.cols()), 0);
    for (int j : cols) mask[static_cast<std::size_t>(j)] = 1;
    const double inv_var = 1.0 / (prior_sd * prior_sd);
    auto logf = [&](double x) {
      return shifted_log_likelihood(blk, x - x0, feature, mask) - 0.5 * x * x * inv_var;
    };
    const double x1 = slice_update(x0, logf, cfg, rng);
    const double delta = x1 - x0;
    value = x1;
    if (blk.logits.rows() == 0) return;
    for (int j : cols) {
      if (feature < 0)
        blk.logits.col(j).array() += delta;
      else
        blk.logits.col(j) += delta * blk.X->col(feature);
    }
  }

  const LocationPosterior* post_;
  std::vector<Block> blocks_;
};

inline void update_hyperparameters(ModelState& s, const ClassHierarchy& h, const PriorSet& priors,
                                   const FitConfig& cfg, RngStream& rng) {
  auto draw = [&](double current, const std::vector<double>& values, const GammaPrior& prior) {
    return cfg.hyper_kernel == HyperKernel::gibbs ? gibbs_precision_update(values, prior, rng)
                                                  : slice_log_tau_update(current, values, prior, cfg.hyper_slice, rng);
  };
  std::vector<double> vals(s.alpha.data(), s.alpha.data() + s.alpha.size());
  s.tau0 = draw(s.tau0, vals, priors.intercept);

  for (Eigen::Index slot = 0; slot < s.tau.size(); ++slot) {
    vals.clear();
    for (Eigen::Index col = 0; col < s.coef.cols(); ++col) {
      if (tau_slot(s.kind, h, col) != slot) continue;
      for (Eigen::Index l = 0; l < s.coef.rows(); ++l)
        vals.push_back(s.has_ard() ? s.coef(l, col) / s.ard(l) : s.coef(l, col));
    }
    s.tau(slot) = draw(s.tau(slot), vals, priors.coef[static_cast<std::size_t>(slot)]);
  }

  if (s.has_ard()) {
    for (Eigen::Index l = 0; l < s.coef.rows(); ++l) {
      vals.clear();
      for (Eigen::Index col = 0; col < s.coef.cols(); ++col)
        vals.push_back(s.coef(l, col) / s.tau(tau_slot(s.kind, h, col)));
      s.ard(l) = draw(s.ard(l), vals, *priors.ard);
    }
  }
}

}  // namespace detail

/// Runs one MCMC chain and returns the draws retained after burn-in.
///
/// mnl and cor_mnl move all location parameters together (one HMC
/// trajectory or one slice sweep). tree_mnl updates each nested model on
/// its own, each with a private random stream, so the result does not
/// depend on node order or on `cfg.threads`.
inline PosteriorChain fit(ModelKind kind, const ClassHierarchy& h, const Dataset& data, const PriorSet& priors,
                          const FitConfig& cfg) {
  cfg.validate();
  check_priors(kind, h, priors);
  for (int yi : data.y)
    if (yi < 0 || static_cast<std::size_t>(yi) >= h.num_classes()) throw InferenceError("training label outside hierarchy");
  const Eigen::Index p = data.X.cols();

  RngStream master(cfg.seed, 0);

  // Start from a prior draw at the median sds. An all-zero start lets the
  // first precision update see zero sums of squares, which can shrink the
  // sds far below any HMC step size.
  ModelState state = initial_state(kind, h, p, priors);
  RngStream init_rng = master.split(3);
  for (auto& a : state.alpha) a = init_rng.normal(0.0, state.tau0);
  for (Eigen::Index col = 0; col < state.coef.cols(); ++col)
    for (Eigen::Index l = 0; l < p; ++l) state.coef(l, col) = init_rng.normal(0.0, coef_sd(state, h, l, col));
  LocationPosterior post(kind, h, data);
  if (!std::isfinite(post.value_and_gradient(state, nullptr)))
    throw InferenceError("log posterior is not finite at the initial state");

  RngStream hyper_rng = master.split(1);
  RngStream coef_rng = master.split(2);
  std::vector<RngStream> node_rng;
  for (std::size_t m = 0; m < h.num_nodes(); ++m) node_rng.push_back(master.split(100 + m));

  detail::CoordinateSlicer slicer(post);

  PosteriorChain chain;
  chain.kind = kind;
  chain.hierarchy = h.to_string();
  chain.num_features = p;
  chain.config = cfg;
  chain.draws.reserve(static_cast<std::size_t>(cfg.iterations - cfg.burn_in));

  std::vector<char> node_accept(h.num_nodes(), 0);

  auto update_node = [&](int m) {
    if (cfg.coef_kernel == CoefKernel::slice) {
      slicer.sweep_node(state, m, cfg.slice, node_rng[static_cast<std::size_t>(m)]);
      return;
    }
    const int fb = h.first_branch(m);
    const int cm = h.num_children(m);
    Eigen::VectorXd q(cm + p * cm);
    q.head(cm) = state.alpha.segment(fb, cm);
    Eigen::MatrixXd bm = state.coef.middleCols(fb, cm);
    q.tail(p * cm) = Eigen::Map<const Eigen::VectorXd>(bm.data(), bm.size());
    auto log_pi = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      Eigen::Map<const Eigen::MatrixXd> beta(x.data() + cm, p, cm);
      return post.node_value(state, m, x.head(cm), beta, &g);
    };
    HmcResult r = hmc_update(q, log_pi, cfg.hmc, node_rng[static_cast<std::size_t>(m)]);
    node_accept[static_cast<std::size_t>(m)] = r.accepted;
    state.alpha.segment(fb, cm) = q.head(cm);
    state.coef.middleCols(fb, cm) = Eigen::Map<const Eigen::MatrixXd>(q.data() + cm, p, cm);
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    double acceptance = std::numeric_limits<double>::quiet_NaN();
    if (kind == ModelKind::tree_mnl) {
      const int nodes = static_cast<int>(h.num_nodes());
      if (cfg.threads > 1 && nodes > 1) {
        for (int start = 0; start < nodes; start += cfg.threads) {
          std::vector<std::future<void>> jobs;
          for (int m = start; m < std::min(nodes, start + cfg.threads); ++m)
            jobs.push_back(std::async(std::launch::async, update_node, m));
          for (auto& j : jobs) j.get();
        }
      } else {
        for (int m = 0; m < nodes; ++m) update_node(m);
      }
      if (cfg.coef_kernel == CoefKernel::hmc) {
        double acc = 0.0;
        for (char a : node_accept) acc += a;
        acceptance = acc / nodes;
      }
    } else if (cfg.coef_kernel == CoefKernel::slice) {
      slicer.sweep(state, cfg.slice, coef_rng);
    } else {
      Eigen::VectorXd q = pack_location(state);
      ModelState trial = state;
      auto log_pi = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        unpack_location(x, trial);
        return post.value_and_gradient(trial, &g);
      };
      HmcResult r = hmc_update(q, log_pi, cfg.hmc, coef_rng);
      unpack_location(q, state);
      acceptance = r.accepted ? 1.0 : 0.0;
    }

    detail::update_hyperparameters(state, h, priors, cfg, hyper_rng);

    if (it >= cfg.burn_in) {
      IterationDiagnostics d;
      d.iteration = it;
      d.train_log_likelihood = data.empty() ? 0.0 : log_likelihood(state, h, data);
      d.tau0 = state.tau0;
      d.tau = state.tau;
      d.ard = state.ard;
      d.hmc_acceptance = acceptance;
      chain.draws.push_back(state);
      chain.diagnostics.push_back(std::move(d));
    }
  }
  return chain;
}

/// n x c posterior predictive probabilities: the per-draw class
/// probabilities averaged over the chain.
inline Eigen::MatrixXd predict_matrix(const PosteriorChain& chain, const ClassHierarchy& h, const Eigen::MatrixXd& X) {
  if (chain.empty()) throw InferenceError("predict: empty chain");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(X.rows(), static_cast<Eigen::Index>(h.num_classes()));
  for (const auto& s : chain.draws) acc += class_prob_matrix(s, h, X);
  return acc / static_cast<double>(chain.size());
}

inline Eigen::VectorXd predict(const PosteriorChain& chain, const ClassHierarchy& h,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (chain.empty()) throw InferenceError("predict: empty chain");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.num_classes()));
  for (const auto& s : chain.draws) acc += class_probs(s, h, x);
  return acc / static_cast<double>(chain.size());
}

/// Index of the largest entry; ties go to the lowest index.
inline int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  int best = 0;
  for (Eigen::Index j = 1; j < probs.size(); ++j)
    if (probs(j) > probs(best)) best = static_cast<int>(j);
  return best;
}

inline int classify(const PosteriorChain& chain, const ClassHierarchy& h, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return argmax_lowest(predict(chain, h, x));
}

// ---------------------------------------------------------------------------
// JSON layout
//
// {
//   "format": "hierclass-chain/1",
//   "model": "cormnl", "hierarchy": "((1,2),(3,4))", "num_features": 2,
//   "config": { iterations, burn_in, coef_kernel, hyper_kernel, hmc{...}, slice{...}, seed, ... },
//   "draws": [ { "alpha": [...], "coef": [[column 0], [column 1], ...], "tau0": x,
//                "tau": [...], "ard": [...] } ],
//   "diagnostics": [ { "iteration", "train_log_likelihood", "tau0", "tau", "ard", "hmc_acceptance" } ]
// }
//
// Column k of "coef" is a class vector (mnl) or a branch vector (treemnl,
// cormnl), indexed as in ModelState. hmc_acceptance is null for slice fits.

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const FitConfig& c) {
  return {{"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"coef_kernel", to_string(c.coef_kernel)},
          {"hyper_kernel", to_string(c.hyper_kernel)},
          {"hmc", {{"leapfrog_steps", c.hmc.leapfrog_steps}, {"step_size", c.hmc.step_size}}},
          {"slice", {{"width", c.slice.width}, {"max_step_out", c.slice.max_step_out}}},
          {"hyper_slice", {{"width", c.hyper_slice.width}, {"max_step_out", c.hyper_slice.max_step_out}}},
          {"seed", c.seed},
          {"threads", c.threads}};
}

inline FitConfig fit_config_from_json(const nlohmann::json& j) {
  FitConfig c;
  c.iterations = j.at("iterations").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.coef_kernel = parse_coef_kernel(j.at("coef_kernel").get<std::string>());
  c.hyper_kernel = parse_hyper_kernel(j.at("hyper_kernel").get<std::string>());
  c.hmc.leapfrog_steps = j.at("hmc").at("leapfrog_steps").get<int>();
  c.hmc.step_size = j.at("hmc").at("step_size").get<double>();
  c.slice.width = j.at("slice").at("width").get<double>();
  c.slice.max_step_out = j.at("slice").at("max_step_out").get<int>();
  if (j.contains("hyper_slice")) {
    c.hyper_slice.width = j.at("hyper_slice").at("width").get<double>();
    c.hyper_slice.max_step_out = j.at("hyper_slice").at("max_step_out").get<int>();
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.value("threads", 1);
  return c;
}

inline nlohmann::json to_json(const ModelState& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index k = 0; k < s.coef.cols(); ++k) cols.push_back(vec_to_json(s.coef.col(k)));
  return {{"alpha", vec_to_json(s.alpha)}, {"coef", cols}, {"tau0", s.tau0}, {"tau", vec_to_json(s.tau)},
          {"ard", vec_to_json(s.ard)}};
}

inline ModelState state_from_json(const nlohmann::json& j, ModelKind kind, Eigen::Index p) {
  ModelState s;
  s.kind = kind;
  s.alpha = vec_from_json(j.at("alpha"));
  const auto& cols = j.at("coef");
  s.coef.resize(p, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    Eigen::VectorXd col = vec_from_json(cols[k]);
    if (col.size() != p) throw InferenceError("chain json: coefficient column has wrong length");
    s.coef.col(static_cast<Eigen::Index>(k)) = col;
  }
  s.tau0 = j.at("tau0").get<double>();
  s.tau = vec_from_json(j.at("tau"));
  s.ard = vec_from_json(j.at("ard"));
  return s;
}

inline nlohmann::json to_json(const PosteriorChain& chain) {
  nlohmann::json draws = nlohmann::json::array();
  for (const auto& s : chain.draws) draws.push_back(to_json(s));
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : chain.diagnostics) {
    diags.push_back({{"iteration", d.iteration},
                     {"train_log_likelihood", d.train_log_likelihood},
                     {"tau0", d.tau0},
                     {"tau", vec_to_json(d.tau)},
                     {"ard", vec_to_json(d.ard)},
                     {"hmc_acceptance", std::isnan(d.hmc_acceptance) ? nlohmann::json(nullptr)
                                                                     : nlohmann::json(d.hmc_acceptance)}});
  }
  return {{"format", "hierclass-chain/1"},
          {"model", to_string(chain.kind)},
          {"hierarchy", chain.hierarchy},
          {"num_features", chain.num_features},
          {"config", to_json(chain.config)},
          {"draws", draws},
          {"diagnostics", diags}};
}

inline PosteriorChain chain_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hierclass-chain/1") throw InferenceError("chain json: unrecognised format tag");
  PosteriorChain c;
  c.kind = parse_model_kind(j.at("model").get<std::string>());
  c.hierarchy = j.at("hierarchy").get<std::string>();
  c.num_features = j.at("num_features").get<Eigen::Index>();
  c.config = fit_config_from_json(j.at("config"));
  for (const auto& d : j.at("draws")) c.draws.push_back(state_from_json(d, c.kind, c.num_features));
  for (const auto& d : j.at("diagnostics")) {
    IterationDiagnostics x;
    x.iteration = d.at("iteration").get<int>();
    x.train_log_likelihood = d.at("train_log_likelihood").get<double>();
    x.tau0 = d.at("tau0").get<double>();
    x.tau = vec_from_json(d.at("tau"));
    x.ard = vec_from_json(d.at("ard"));
    x.hmc_acceptance = d.at("hmc_acceptance").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : d.at("hmc_acceptance").get<double>();
    c.diagnostics.push_back(std::move(x));
  }
  if (c.diagnostics.size() != c.draws.size()) throw InferenceError("chain json: diagnostics not aligned with draws");
  return c;
}

inline void save_chain(const std::string& path, const PosteriorChain& chain) {
  std::ofstream out(path);
  if (!out) throw InferenceError("cannot write chain to '" + path + "'");
  out << to_json(chain).dump() << '\n';
}

inline PosteriorChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InferenceError("cannot read chain from '" + path + "'");
  return chain_from_json(nlohmann::json::parse(in));
}

/// Per-iteration trace table (one row per retained draw).
inline void write_trace_csv(std::ostream& out, const PosteriorChain& chain) {
  out << "iteration,train_log_likelihood,hmc_acceptance,tau0";
  if (!chain.diagnostics.empty()) {
    for (Eigen::Index k = 0; k < chain.diagnostics.front().tau.size(); ++k) out << ",tau" << (k + 1);
    for (Eigen::Index k = 0; k < chain.diagnostics.front().ard.size(); ++k) out << ",sigma" << (k + 1);
  }
  out << '\n';
  out.precision(10);
  for (const auto& d : chain.diagnostics) {
    out << d.iteration << ',' << d.train_log_likelihood << ',';
    if (!std::isnan(d.hmc_acceptance)) out << d.hmc_acceptance;
    out << ',' << d.tau0;
    for (Eigen::Index k = 0; k < d.tau.size(); ++k) out << ',' << d.tau(k);
    for (Eigen::Index k = 0; k < d.ard.size(); ++k) out << ',' << d.ard(k);
    out << '\n';
  }
}

}  // namespace hierclass
