#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hierclass/datagen.hpp"
#include "hierclass/dataset.hpp"
#include "hierclass/eval.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/inference.hpp"
#include "hierclass/models.hpp"

namespace hierclass {

/// A named experimental setting: hierarchy, covariate law, split sizes, the
/// prior table shared by all three models, and a default sampler plan.
struct Protocol {
  std::string name;
  std::string title;
  ClassHierarchy hierarchy;
  int num_features = 2;
  double low = -5.0;
  double high = 5.0;
  int n_total = 10000;
  int n_train = 100;
  GammaPrior intercept;
  GammaPrior mnl_coef;
  std::vector<GammaPrior> by_level;  // per hierarchy level, for treeMNL and corMNL
  std::optional<GammaPrior> ard;
  int splits = 0;  // > 0: disjoint-subsample design instead of one train/test cut
  FitConfig fit;

  PriorSet priors(ModelKind k) const { return make_priors(k, hierarchy, intercept, mnl_coef, by_level, ard); }

  SimSpec sim_spec(ModelKind generator, int reps, std::uint64_t seed) const {
    SimSpec s;
    s.generator = generator;
    s.hierarchy = hierarchy;
    s.num_features = num_features;
    s.low = low;
    s.high = high;
    s.n_total = n_total;
    s.n_train = n_train;
    s.priors = priors(generator);
    s.replications = reps;
    s.seed = seed;
    return s;
  }
};

inline std::vector<std::string> protocol_names() {
  return {"sim-n100", "sim-n50", "sim-complex", "document-surrogate"};
}

inline Protocol protocol(std::string_view name) {
  Protocol p;
  p.name = std::string(name);
  if (name == "sim-n100" || name == "sim-n50") {
    p.title = name == "sim-n100" ? "Four classes, p=2, N=100" : "Four classes, p=2, N=50";
    p.hierarchy = hierarchies::four_class();
    p.num_features = 2;
    p.low = -5.0;
    p.high = 5.0;
    p.n_total = name == "sim-n100" ? 10000 : 9950;
    p.n_train = name == "sim-n100" ? 100 : 50;
    p.intercept = {1, 10};
    p.mnl_coef = {1, 1};
    p.by_level = {{1, 5}, {1, 20}};
    p.fit.iterations = 1000;
    p.fit.burn_in = 250;
    p.fit.coef_kernel = CoefKernel::slice;
    p.fit.hyper_kernel = HyperKernel::gibbs;
  } else if (name == "sim-complex") {
    p.title = "Eight classes, p=4, N=100";
    p.hierarchy = hierarchies::eight_class();
    p.num_features = 4;
    p.low = 0.0;
    p.high = 1.0;
    p.n_total = 10000;
    p.n_train = 100;
    p.intercept = {1, 10};
    p.mnl_coef = {1, 1};
    p.by_level = {{1, 5}, {1, 20}, {1, 100}};
    p.fit.iterations = 1000;
    p.fit.burn_in = 250;
    p.fit.coef_kernel = CoefKernel::slice;
    p.fit.hyper_kernel = HyperKernel::gibbs;
  } else if (name == "document-surrogate") {
    // 24 classes and 59 covariates; the pool is re-split into 10 disjoint
    // training sets of 200 with the remaining 3556 cases as the test set.
    p.title = "Document-region surrogate, 24 classes, p=59, 10 x N=200";
    p.hierarchy = hierarchies::document_regions();
    p.num_features = 59;
    p.low = -std::sqrt(3.0);
    p.high = std::sqrt(3.0);
    p.n_total = 5556;
    p.n_train = 200;
    p.splits = 10;
    p.intercept = {0.5, 1};
    p.mnl_coef = {0.5, 20};
    p.by_level = {{0.5, 100}};
    p.ard = GammaPrior{1, 10};
    p.fit.iterations = 2500;
    p.fit.burn_in = 500;
    p.fit.coef_kernel = CoefKernel::hmc;
    p.fit.hyper_kernel = HyperKernel::slice;
    p.fit.hmc = {500, 0.02};
  } else {
    throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
  }
  return p;
}

/// splitmix64 finalizer; derives per-job seeds from (seed, ids).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(mix(seed) ^ a) ^ (b << 1)) ^ (c << 2));
}

/// Runs jobs 0..n-1 on up to `threads` workers. Each job writes only its own
/// output slot, so results do not depend on scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

using ProgressFn = std::function<void(const std::string&)>;

/// Generator x fitter comparison over `reps` synthetic replications: each
/// replication draws fresh parameters from the generator's prior and fresh
/// data, and every fitter is trained on the same training split and scored
/// on the same test split.
inline ComparisonTable build_comparison(const Protocol& proto, int reps, const FitConfig& fit_cfg, std::uint64_t seed,
                                        int threads = 1, const ProgressFn& progress = {},
                                        std::vector<ModelKind> generators = {ModelKind::mnl, ModelKind::tree_mnl,
                                                                             ModelKind::cor_mnl},
                                        std::vector<ModelKind> fitters = {ModelKind::mnl, ModelKind::tree_mnl,
                                                                          ModelKind::cor_mnl}) {
  if (reps < 1) throw EvalError("build_comparison: need at least one replication");
  std::vector<std::vector<std::vector<EvalResult>>> results(
      generators.size(), std::vector<std::vector<EvalResult>>(fitters.size(), std::vector<EvalResult>(reps)));
  std::mutex log_mu;
  const int jobs = static_cast<int>(generators.size()) * reps;
  parallel_for(jobs, threads, [&](int job) {
    const std::size_t g = static_cast<std::size_t>(job / reps);
    const int r = job % reps;
    SimSpec spec = proto.sim_spec(generators[g], reps, seed);
    RngStream data_rng(mix_seed(seed, 1 + static_cast<std::uint64_t>(generators[g]), static_cast<std::uint64_t>(r)));
    Replication rep = generate_replication(spec, data_rng);
    for (std::size_t f = 0; f < fitters.size(); ++f) {
      FitConfig cfg = fit_cfg;
      cfg.threads = 1;
      cfg.seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(generators[g]), static_cast<std::uint64_t>(r),
                          static_cast<std::uint64_t>(fitters[f]));
      PosteriorChain chain = fit(fitters[f], proto.hierarchy, rep.train, proto.priors(fitters[f]), cfg);
      results[g][f][static_cast<std::size_t>(r)] = evaluate(chain, proto.hierarchy, rep.test);
    }
    if (progress) {
      std::lock_guard<std::mutex> lock(log_mu);
      progress("data from " + std::string(display_name(generators[g])) + ", replication " + std::to_string(r + 1) +
               "/" + std::to_string(reps) + " done");
    }
  });
  return assemble_comparison(proto.title, std::move(generators), std::move(fitters), std::move(results));
}

/// Disjoint-subsample study: one pool generated from `generator`, split into
/// proto.splits training sets of proto.n_train cases plus the shared
/// remainder as test set. Each split is standardized with its own training
/// statistics. The returned table has a single generator column whose
/// "replications" are the splits.
inline ComparisonTable build_split_study(const Protocol& proto, ModelKind generator, const FitConfig& fit_cfg,
                                         std::uint64_t seed, int threads = 1, const ProgressFn& progress = {},
                                         std::vector<ModelKind> fitters = {ModelKind::mnl, ModelKind::tree_mnl,
                                                                           ModelKind::cor_mnl}) {
  if (proto.splits < 1) throw EvalError("build_split_study: protocol has no split design");
  SimSpec spec = proto.sim_spec(generator, 1, seed);
  spec.n_train = 0;
  RngStream data_rng(mix_seed(seed, 7, static_cast<std::uint64_t>(generator)));
  Replication pool = generate_replication(spec, data_rng);
  RngStream split_rng(mix_seed(seed, 8));
  Splits sp = subsample_splits(pool.test, static_cast<std::size_t>(proto.splits),
                               static_cast<std::size_t>(proto.n_train), split_rng);

  std::vector<std::vector<std::vector<EvalResult>>> results(
      1, std::vector<std::vector<EvalResult>>(fitters.size(), std::vector<EvalResult>(sp.train.size())));
  std::mutex log_mu;
  const int jobs = static_cast<int>(sp.train.size() * fitters.size());
  parallel_for(jobs, threads, [&](int job) {
    const std::size_t k = static_cast<std::size_t>(job) / fitters.size();
    const std::size_t f = static_cast<std::size_t>(job) % fitters.size();
    std::vector<Dataset> others{sp.test};
    StandardizedData st = standardize(sp.train[k], others);
    FitConfig cfg = fit_cfg;
    cfg.threads = 1;
    cfg.seed = mix_seed(seed, 200, k, static_cast<std::uint64_t>(fitters[f]));
    PosteriorChain chain = fit(fitters[f], proto.hierarchy, st.train, proto.priors(fitters[f]), cfg);
    results[0][f][k] = evaluate(chain, proto.hierarchy, st.others[0]);
    if (progress) {
      std::lock_guard<std::mutex> lock(log_mu);
      progress("split " + std::to_string(k + 1) + ", " + std::string(display_name(fitters[f])) +
               ": avg log-prob " + format_fixed(results[0][f][k].avg_log_prob, 4) + ", HMC acceptance " +
               format_fixed(chain.mean_hmc_acceptance(), 3));
    }
  });
  return assemble_comparison(proto.title, {generator}, std::move(fitters), std::move(results));
}

}  // namespace hierclass
