// hierclass command-line driver: simulate, fit, predict, evaluate and
// replicate-tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hierclass/datagen.hpp"
#include "hierclass/dataset.hpp"
#include "hierclass/eval.hpp"
#include "hierclass/experiments.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/inference.hpp"
#include "hierclass/models.hpp"

namespace fs = std::filesystem;
using namespace hierclass;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string protocol = "sim-n100";
  std::string model = "cormnl";
  std::string hierarchy;
  std::string train;
  std::string test;
  std::string chain;
  std::string out = "out";
  std::optional<int> iters;
  std::optional<int> burnin;
  std::optional<std::string> kernel;
  std::optional<std::string> hyper_kernel;
  std::optional<int> leapfrog;
  std::optional<double> step_size;
  std::optional<double> slice_width;
  int reps = 20;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<int> features;
  std::optional<int> n_total;
  std::optional<int> n_train;
  std::vector<std::string> generators;
  std::vector<std::string> fitters;
  bool quiet = false;
};

GammaPrior parse_gamma(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("prior '" + text + "': expected shape,scale");
  try {
    return GammaPrior(std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1)));
  } catch (const std::invalid_argument&) {
    throw UsageError("prior '" + text + "': expected two positive numbers");
  }
}

/// `--hierarchy` takes a file holding the tree text, or the tree text itself
/// when it starts with '('.
ClassHierarchy load_hierarchy(const std::string& spec) {
  if (spec.empty()) throw UsageError("--hierarchy is required");
  if (spec.front() == '(') return parse_hierarchy(spec);
  std::ifstream in(spec);
  if (!in) throw UsageError("--hierarchy: cannot open '" + spec + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hierarchy(ss.str());
}

Dataset load_labelled(const std::string& path, const ClassHierarchy& h, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw UsageError(std::string(flag) + ": file '" + path + "' does not exist");
  CsvSchema schema;
  schema.labels = h.labels();
  return load_csv(path, schema);
}

FitConfig make_fit_config(const Options& o, FitConfig base) {
  if (o.iters) base.iterations = *o.iters;
  if (o.burnin) base.burn_in = *o.burnin;
  if (o.kernel) base.coef_kernel = parse_coef_kernel(*o.kernel);
  if (o.hyper_kernel) base.hyper_kernel = parse_hyper_kernel(*o.hyper_kernel);
  if (o.leapfrog) base.hmc.leapfrog_steps = *o.leapfrog;
  if (o.step_size) base.hmc.step_size = *o.step_size;
  if (o.slice_width) base.slice.width = *o.slice_width;
  base.seed = o.seed;
  base.threads = o.threads;
  base.validate();
  return base;
}

struct PriorFlags {
  std::string intercept;
  std::string mnl_coef;
  std::vector<std::string> levels;
  std::string ard;
  bool no_ard = false;
};

PriorSet make_prior_set(const Protocol& proto, const PriorFlags& pf, ModelKind kind, const ClassHierarchy& h) {
  GammaPrior intercept = pf.intercept.empty() ? proto.intercept : parse_gamma(pf.intercept);
  GammaPrior mnl_coef = pf.mnl_coef.empty() ? proto.mnl_coef : parse_gamma(pf.mnl_coef);
  std::vector<GammaPrior> levels = proto.by_level;
  if (!pf.levels.empty()) {
    levels.clear();
    for (const auto& s : pf.levels) levels.push_back(parse_gamma(s));
  }
  std::optional<GammaPrior> ard = proto.ard;
  if (!pf.ard.empty()) ard = parse_gamma(pf.ard);
  if (pf.no_ard) ard.reset();
  return make_priors(kind, h, intercept, mnl_coef, levels, ard);
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

/// Writes the active subcommand's effective settings as an INI section that
/// `--config` accepts.
void echo_config(const CLI::App& sub, const fs::path& dir) {
  auto quote = [](const std::string& v) {
    if (v.find_first_of(" ,;#=\"'()") == std::string::npos) return v;
    std::string q = "\"";
    for (char ch : v) q += ch == '"' ? std::string("\\\"") : std::string(1, ch);
    return q + "\"";
  };
  auto out = open_out(dir / "config.ini");
  out << "# re-run with: hierclass --config config.ini " << sub.get_name() << "\n";
  out << "[" << sub.get_name() << "]\n";
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help") continue;
    std::vector<std::string> vals = opt->count() ? opt->results() : std::vector<std::string>{opt->get_default_str()};
    std::erase(vals, std::string());
    if (vals.empty()) continue;
    out << name << "=";
    for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? " " : "") << quote(vals[i]);
    out << "\n";
  }
}

void log(const Options& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << '\n';
}

std::vector<ModelKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ModelKind> out;
  for (const auto& n : names) out.push_back(parse_model_kind(n));
  if (out.empty()) out.assign(std::begin(all_model_kinds), std::end(all_model_kinds));
  return out;
}

// ---------------------------------------------------------------------------

int run_simulate(const Options& o, const PriorFlags& pf, const CLI::App& sub) {
  Protocol proto = protocol(o.protocol);
  ClassHierarchy h = o.hierarchy.empty() ? proto.hierarchy : load_hierarchy(o.hierarchy);
  if (!o.hierarchy.empty()) proto.hierarchy = h;
  ModelKind gen = parse_model_kind(o.model);
  SimSpec spec = proto.sim_spec(gen, 1, o.seed);
  if (o.features) spec.num_features = *o.features;
  if (o.n_total) spec.n_total = *o.n_total;
  if (o.n_train) spec.n_train = *o.n_train;
  spec.priors = make_prior_set(proto, pf, gen, h);
  RngStream rng(o.seed, 0);
  Replication rep = generate_replication(spec, rng);

  fs::path dir = prepare_out(o.out);
  echo_config(sub, dir);
  save_csv((dir / "train.csv").string(), rep.train, h.labels());
  save_csv((dir / "test.csv").string(), rep.test, h.labels());
  open_out(dir / "hierarchy.tree") << h.to_string() << '\n';
  nlohmann::json truth = to_json(rep.truth);
  truth["model"] = to_string(gen);
  open_out(dir / "truth.json") << truth.dump(2) << '\n';
  log(o, "wrote " + std::to_string(rep.train.size()) + " training and " + std::to_string(rep.test.size()) +
             " test cases to " + dir.string());
  return 0;
}

int run_fit(const Options& o, const PriorFlags& pf, const CLI::App& sub) {
  Protocol proto = protocol(o.protocol);
  ClassHierarchy h = load_hierarchy(o.hierarchy);
  Dataset train = load_labelled(o.train, h, "--train");
  if (train.empty()) throw UsageError("--train: '" + o.train + "' has no data rows");
  ModelKind kind = parse_model_kind(o.model);
  FitConfig cfg = make_fit_config(o, proto.fit);
  PriorSet priors = make_prior_set(proto, pf, kind, h);

  PosteriorChain chain = fit(kind, h, train, priors, cfg);

  fs::path dir = prepare_out(o.out);
  echo_config(sub, dir);
  save_chain((dir / "chain.json").string(), chain);
  auto trace = open_out(dir / "trace.csv");
  write_trace_csv(trace, chain);
  double mean_ll = 0.0;
  for (const auto& d : chain.diagnostics) mean_ll += d.train_log_likelihood;
  mean_ll /= static_cast<double>(chain.diagnostics.size());
  std::ostringstream msg;
  msg << display_name(kind) << ": " << chain.size() << " draws retained, mean train log-likelihood "
      << format_fixed(mean_ll, 4);
  if (cfg.coef_kernel == CoefKernel::hmc) msg << ", HMC acceptance " << format_fixed(chain.mean_hmc_acceptance(), 3);
  log(o, msg.str());
  return 0;
}

PosteriorChain load_chain_checked(const Options& o, ClassHierarchy& h) {
  if (o.chain.empty()) throw UsageError("--chain is required");
  if (!fs::exists(o.chain)) throw UsageError("--chain: file '" + o.chain + "' does not exist");
  PosteriorChain chain = load_chain(o.chain);
  h = o.hierarchy.empty() ? parse_hierarchy(chain.hierarchy) : load_hierarchy(o.hierarchy);
  if (h.to_string() != chain.hierarchy) throw UsageError("--hierarchy does not match the hierarchy stored in the chain");
  if (chain.empty()) throw UsageError("--chain: chain has no draws");
  return chain;
}

int run_predict(const Options& o, const CLI::App& sub) {
  ClassHierarchy h = hierarchies::flat(2);
  PosteriorChain chain = load_chain_checked(o, h);
  Dataset test = load_labelled(o.test, h, "--test");
  if (test.empty()) throw UsageError("--test: '" + o.test + "' has no data rows");
  if (static_cast<Eigen::Index>(test.num_features()) != chain.num_features)
    throw UsageError("--test: " + std::to_string(test.num_features()) + " covariates, chain expects " +
                     std::to_string(chain.num_features));
  Eigen::MatrixXd P = predict_matrix(chain, h, test.X);

  fs::path dir = prepare_out(o.out);
  echo_config(sub, dir);
  auto out = open_out(dir / "predictions.csv");
  out << "row,predicted";
  for (const auto& l : h.labels()) out << ",p_" << l;
  out << '\n';
  out.precision(10);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    out << (i + 1) << ',' << h.label(argmax_lowest(P.row(i).transpose()));
    for (Eigen::Index j = 0; j < P.cols(); ++j) out << ',' << P(i, j);
    out << '\n';
  }
  log(o, "wrote predictions for " + std::to_string(P.rows()) + " cases to " + (dir / "predictions.csv").string());
  return 0;
}

int run_evaluate(const Options& o, const CLI::App& sub) {
  ClassHierarchy h = hierarchies::flat(2);
  PosteriorChain chain = load_chain_checked(o, h);
  Dataset test = load_labelled(o.test, h, "--test");
  if (test.empty()) throw UsageError("--test: '" + o.test + "' has no data rows");
  EvalResult r = evaluate(chain, h, test);

  fs::path dir = prepare_out(o.out);
  echo_config(sub, dir);
  auto out = open_out(dir / "evaluation.csv");
  out << "model,n_test,avg_log_prob,error_pct\n"
      << to_string(chain.kind) << ',' << r.n_test << ',' << format_fixed(r.avg_log_prob, 6) << ','
      << format_fixed(100.0 * r.error_rate, 3) << '\n';
  std::cout << display_name(chain.kind) << ": avg log-prob " << format_fixed(r.avg_log_prob, 4) << ", error "
            << format_fixed(100.0 * r.error_rate, 1) << "% on " << r.n_test << " cases\n";
  return 0;
}

int run_tables(const Options& o, const CLI::App& sub) {
  Protocol proto = protocol(o.protocol);
  if (o.features) proto.num_features = *o.features;
  if (o.n_total) proto.n_total = *o.n_total;
  if (o.n_train) proto.n_train = *o.n_train;
  FitConfig cfg = make_fit_config(o, proto.fit);
  ProgressFn progress = [&](const std::string& m) { log(o, m); };
  std::vector<ModelKind> fitters = parse_kinds(o.fitters);
  std::vector<ModelKind> generators = parse_kinds(o.generators);

  ComparisonTable table;
  if (proto.splits > 0) {
    if (generators.size() != 1) generators = {ModelKind::cor_mnl};
    table = build_split_study(proto, generators.front(), cfg, o.seed, o.threads, progress, fitters);
  } else {
    if (o.reps < 1) throw UsageError("--reps must be at least 1");
    table = build_comparison(proto, o.reps, cfg, o.seed, o.threads, progress, generators, fitters);
  }

  fs::path dir = prepare_out(o.out);
  echo_config(sub, dir);
  auto csv = open_out(dir / (proto.name + ".csv"));
  write_comparison_csv(csv, table);
  std::ostringstream text;
  write_comparison_text(text, table);
  open_out(dir / (proto.name + ".txt")) << text.str();
  std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multinomial-logit classifiers fitted by MCMC"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file with one [section] per subcommand; command-line flags win");
  app.require_subcommand(1);

  Options o;
  PriorFlags pf;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    s->add_option("--out", o.out, "Output directory")->capture_default_str();
    s->add_flag("--quiet", o.quiet, "Suppress progress messages");
  };
  auto add_priors = [&](CLI::App* s) {
    s->add_option("--protocol", o.protocol, "Protocol supplying default priors and sampler settings")
        ->check(CLI::IsMember(protocol_names()))
        ->capture_default_str();
    s->add_option("--prior-intercept", pf.intercept, "Gamma prior shape,scale on the intercept precision");
    s->add_option("--prior-coef", pf.mnl_coef, "Gamma prior on the MNL coefficient precision");
    s->add_option("--prior-level", pf.levels, "Gamma prior per hierarchy level (repeat, root first)");
    s->add_option("--prior-ard", pf.ard, "Gamma prior on per-covariate ARD precisions");
    s->add_flag("--no-ard", pf.no_ard, "Disable ARD scales");
  };
  auto add_sampler = [&](CLI::App* s) {
    s->add_option("--iters", o.iters, "MCMC iterations")->check(CLI::PositiveNumber);
    s->add_option("--burnin", o.burnin, "Iterations discarded before prediction")->check(CLI::NonNegativeNumber);
    s->add_option("--kernel", o.kernel, "Coefficient update")->check(CLI::IsMember({"slice", "hmc"}));
    s->add_option("--hyper-kernel", o.hyper_kernel, "Hyperparameter update")->check(CLI::IsMember({"gibbs", "slice"}));
    s->add_option("--leapfrog", o.leapfrog, "HMC leapfrog steps")->check(CLI::PositiveNumber);
    s->add_option("--step-size", o.step_size, "HMC step size")->check(CLI::PositiveNumber);
    s->add_option("--slice-width", o.slice_width, "Slice sampler initial width")->check(CLI::PositiveNumber);
    s->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  };
  const std::vector<std::string> model_names{"mnl", "treemnl", "cormnl"};

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic train/test pair from a model's prior");
  sim->add_option("--model", o.model, "Generating model")->check(CLI::IsMember(model_names))->capture_default_str();
  sim->add_option("--hierarchy", o.hierarchy, "Tree file or literal tree; default from the protocol");
  sim->add_option("--features", o.features, "Number of covariates")->check(CLI::PositiveNumber);
  sim->add_option("--n-total", o.n_total, "Cases generated")->check(CLI::PositiveNumber);
  sim->add_option("--n-train", o.n_train, "Leading cases used for training")->check(CLI::NonNegativeNumber);
  add_priors(sim);
  add_common(sim);

  auto* fit_cmd = app.add_subcommand("fit", "Fit one model by MCMC and write its chain");
  fit_cmd->add_option("--model", o.model, "Model")->check(CLI::IsMember(model_names))->capture_default_str();
  fit_cmd->add_option("--hierarchy", o.hierarchy, "Tree file or literal tree")->required();
  fit_cmd->add_option("--train", o.train, "Training CSV with a 'label' column")->required();
  add_priors(fit_cmd);
  add_sampler(fit_cmd);
  add_common(fit_cmd);

  auto* pred = app.add_subcommand("predict", "Posterior predictive probabilities for a CSV");
  pred->add_option("--chain", o.chain, "Chain JSON written by fit")->required();
  pred->add_option("--test", o.test, "CSV to predict")->required();
  pred->add_option("--hierarchy", o.hierarchy, "Tree file; default is the chain's hierarchy");
  add_common(pred);

  auto* ev = app.add_subcommand("evaluate", "Average log-probability and error rate on a labelled CSV");
  ev->add_option("--chain", o.chain, "Chain JSON written by fit")->required();
  ev->add_option("--test", o.test, "Labelled test CSV")->required();
  ev->add_option("--hierarchy", o.hierarchy, "Tree file; default is the chain's hierarchy");
  add_common(ev);

  auto* tab = app.add_subcommand("replicate-tables", "Run a generator x fitter comparison study");
  tab->add_option("--table", o.protocol, "Study protocol")->check(CLI::IsMember(protocol_names()))->capture_default_str();
  tab->add_option("--reps", o.reps, "Replications per generator")->capture_default_str();
  tab->add_option("--generators", o.generators, "Generating models (default all)")->check(CLI::IsMember(model_names));
  tab->add_option("--fitters", o.fitters, "Fitted models (default all)")->check(CLI::IsMember(model_names));
  tab->add_option("--features", o.features, "Override the number of covariates")->check(CLI::PositiveNumber);
  tab->add_option("--n-total", o.n_total, "Override the cases generated per replication")->check(CLI::PositiveNumber);
  tab->add_option("--n-train", o.n_train, "Override the training size")->check(CLI::PositiveNumber);
  add_sampler(tab);
  add_common(tab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) return run_simulate(o, pf, *sim);
    if (*fit_cmd) return run_fit(o, pf, *fit_cmd);
    if (*pred) return run_predict(o, *pred);
    if (*ev) return run_evaluate(o, *ev);
    if (*tab) return run_tables(o, *tab);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
