#pragma once

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "hierclass/dataset.hpp"
#include "hierclass/hierarchy.hpp"
#include "hierclass/inference.hpp"
#include "hierclass/models.hpp"

namespace hierclass {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalResult {
  double avg_log_prob = 0.0;  // nats per test case
  double error_rate = 0.0;    // fraction misclassified
  std::size_t n_test = 0;
};

/// Scores an n x c matrix of predictive probabilities against labels. The
/// predicted class is the argmax, ties to the lowest index.
inline EvalResult evaluate_probabilities(const Eigen::MatrixXd& probs, std::span<const int> y) {
  if (y.empty()) throw EvalError("evaluate: empty test set");
  if (static_cast<std::size_t>(probs.rows()) != y.size()) throw EvalError("evaluate: probability rows differ from labels");
  double lp = 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    lp += std::log(probs(r, y[i]));
    if (argmax_lowest(probs.row(r).transpose()) != y[i]) ++wrong;
  }
  const double n = static_cast<double>(y.size());
  return {lp / n, static_cast<double>(wrong) / n, y.size()};
}

inline EvalResult evaluate(const PosteriorChain& chain, const ClassHierarchy& h, const Dataset& test) {
  if (test.empty()) throw EvalError("evaluate: empty test set");
  return evaluate_probabilities(predict_matrix(chain, h, test.X), test.y);
}

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;  // two-sided
  int df = 0;
};

/// Paired t-test on a - b with n - 1 degrees of freedom.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EvalError("paired_t_test: vectors differ in length");
  if (a.size() < 2) throw EvalError("paired_t_test: need at least 2 pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 1e-300) || !std::isfinite(sd)) throw EvalError("paired_t_test: differences have zero variance");
  TTestResult r;
  r.df = static_cast<int>(a.size()) - 1;
  r.t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

/// Generator x fitter grid of per-replication results.
struct ComparisonTable {
  std::string title;
  std::vector<ModelKind> generators;
  std::vector<ModelKind> fitters;
  // results[g][f][r]
  std::vector<std::vector<std::vector<EvalResult>>> results;

  std::size_t replications() const { return results.empty() || results[0].empty() ? 0 : results[0][0].size(); }

  EvalResult mean(std::size_t g, std::size_t f) const {
    const auto& v = results.at(g).at(f);
    EvalResult m;
    for (const auto& r : v) {
      m.avg_log_prob += r.avg_log_prob;
      m.error_rate += r.error_rate;
      m.n_test += r.n_test;
    }
    m.avg_log_prob /= static_cast<double>(v.size());
    m.error_rate /= static_cast<double>(v.size());
    m.n_test /= v.size();
    return m;
  }

  std::vector<double> log_probs(std::size_t g, std::size_t f) const {
    std::vector<double> out;
    for (const auto& r : results.at(g).at(f)) out.push_back(r.avg_log_prob);
    return out;
  }

  /// Fitter with the highest mean average log-probability in column g.
  std::size_t best_by_log_prob(std::size_t g) const {
    std::size_t best = 0;
    for (std::size_t f = 1; f < fitters.size(); ++f)
      if (mean(g, f).avg_log_prob > mean(g, best).avg_log_prob) best = f;
    return best;
  }

  std::size_t best_by_error(std::size_t g) const {
    std::size_t best = 0;
    for (std::size_t f = 1; f < fitters.size(); ++f)
      if (mean(g, f).error_rate < mean(g, best).error_rate) best = f;
    return best;
  }

  std::optional<std::size_t> fitter_index(ModelKind k) const {
    for (std::size_t f = 0; f < fitters.size(); ++f)
      if (fitters[f] == k) return f;
    return std::nullopt;
  }

  /// Paired t-test of fitter f1 against f2 on average log-probability in column g.
  TTestResult compare(std::size_t g, std::size_t f1, std::size_t f2) const {
    auto a = log_probs(g, f1);
    auto b = log_probs(g, f2);
    return paired_t_test(a, b);
  }
};

inline ComparisonTable assemble_comparison(std::string title, std::vector<ModelKind> generators,
                                           std::vector<ModelKind> fitters,
                                           std::vector<std::vector<std::vector<EvalResult>>> results) {
  if (results.size() != generators.size()) throw EvalError("comparison: incomplete grid (generator count)");
  std::size_t reps = 0;
  for (std::size_t g = 0; g < results.size(); ++g) {
    if (results[g].size() != fitters.size()) throw EvalError("comparison: incomplete grid (fitter count)");
    for (const auto& cell : results[g]) {
      if (cell.empty()) throw EvalError("comparison: empty cell");
      if (reps == 0) reps = cell.size();
      if (cell.size() != reps) throw EvalError("comparison: unequal replication counts");
    }
  }
  return {std::move(title), std::move(generators), std::move(fitters), std::move(results)};
}

inline std::string format_fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

/// One row per (generator, fitter) cell with means, best flags and the
/// p-value of the column's diagonal fitter against this one.
inline void write_comparison_csv(std::ostream& out, const ComparisonTable& t) {
  out << "generator,fitter,replications,avg_log_prob,error_pct,best_log_prob,best_error,p_value_vs_diagonal\n";
  for (std::size_t g = 0; g < t.generators.size(); ++g) {
    auto diag = t.fitter_index(t.generators[g]);
    for (std::size_t f = 0; f < t.fitters.size(); ++f) {
      EvalResult m = t.mean(g, f);
      out << to_string(t.generators[g]) << ',' << to_string(t.fitters[f]) << ',' << t.replications() << ','
          << format_fixed(m.avg_log_prob, 6) << ',' << format_fixed(100.0 * m.error_rate, 3) << ','
          << (t.best_by_log_prob(g) == f ? 1 : 0) << ',' << (t.best_by_error(g) == f ? 1 : 0) << ',';
      if (diag && *diag != f && t.replications() >= 2) {
        try {
          out << format_fixed(t.compare(g, *diag, f).p_value, 6);
        } catch (const EvalError&) {
        }
      }
      out << '\n';
    }
  }
}

/// Plain-text table: rows are fitted models, column pairs are generators.
/// Column-best cells are marked with '*'.
inline void write_comparison_text(std::ostream& out, const ComparisonTable& t) {
  constexpr int label_w = 16;
  constexpr int cell_w = 24;
  out << t.title << "  (" << t.replications() << " replications)\n";
  out << std::left << std::setw(label_w) << "";
  for (ModelKind g : t.generators) out << "| " << std::setw(cell_w - 2) << ("Data from " + std::string(display_name(g)));
  out << '\n' << std::setw(label_w) << "";
  for (std::size_t g = 0; g < t.generators.size(); ++g) out << "| " << std::setw(cell_w - 2) << "AvgLogProb  Error %";
  out << '\n' << std::string(label_w + cell_w * t.generators.size(), '=') << '\n';
  for (std::size_t f = 0; f < t.fitters.size(); ++f) {
    out << std::setw(label_w) << (std::string(display_name(t.fitters[f])) + " method");
    for (std::size_t g = 0; g < t.generators.size(); ++g) {
      EvalResult m = t.mean(g, f);
      std::string lp = (t.best_by_log_prob(g) == f ? "*" : " ") + format_fixed(m.avg_log_prob, 4);
      std::string er = (t.best_by_error(g) == f ? "*" : " ") + format_fixed(100.0 * m.error_rate, 1);
      std::ostringstream cell;
      cell << std::left << std::setw(12) << lp << er;
      out << "| " << std::setw(cell_w - 2) << cell.str();
    }
    out << '\n';
  }
  out << "Paired t-tests on AvgLogProb (diagonal model vs. each other model, two-sided):\n";
  for (std::size_t g = 0; g < t.generators.size(); ++g) {
    auto diag = t.fitter_index(t.generators[g]);
    if (!diag || t.replications() < 2) continue;
    for (std::size_t f = 0; f < t.fitters.size(); ++f) {
      if (f == *diag) continue;
      out << "  data from " << display_name(t.generators[g]) << ": " << display_name(t.fitters[*diag]) << " vs "
          << display_name(t.fitters[f]) << ": ";
      try {
        TTestResult r = t.compare(g, *diag, f);
        out << "t = " << format_fixed(r.t, 3) << ", p = " << format_fixed(r.p_value, 4) << '\n';
      } catch (const EvalError& e) {
        out << e.what() << '\n';
      }
    }
  }
}

}  // namespace hierclass
