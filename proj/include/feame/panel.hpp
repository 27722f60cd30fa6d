#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <cstddef>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace feame {

/// One individual's choice history. Covariates are stored row-major,
/// `x.size() == y.size() * K`.
struct Individual {
  std::string id;
  int t0 = 1;  ///< calendar index of y[0]
  std::vector<int> y;
  std::vector<double> x;
  int d1 = 0;  ///< duration state entering the first observed period

  std::size_t length() const { return y.size(); }
};

/// Unbalanced panel of discrete choices in {0, ..., J}.
///
/// Invariants (checked on construction): every y is in range, every
/// individual has at least two periods, covariate blocks have width K.
class Panel {
 public:
  Panel() = default;
  Panel(std::vector<Individual> individuals, int num_alternatives, int num_covariates = 0);

  int num_alternatives() const { return num_alternatives_; }
  int num_covariates() const { return num_covariates_; }
  bool has_covariates() const { return num_covariates_ > 0; }
  std::size_t size() const { return individuals_.size(); }
  bool empty() const { return individuals_.empty(); }

  const std::vector<Individual>& individuals() const { return individuals_; }
  const Individual& operator[](std::size_t i) const { return individuals_[i]; }

  /// Covariate vector of individual i at period t (0-based).
  std::span<const double> x(std::size_t i, std::size_t t) const;

  /// Window length shared by every individual, or 0 when lengths differ.
  std::size_t common_length() const;
  std::size_t total_observations() const;

 private:
  std::vector<Individual> individuals_;
  int num_alternatives_ = 2;
  int num_covariates_ = 0;
};

/// Column mapping for CSV ingestion.
struct CsvSchema {
  std::string id = "id";
  std::string t = "t";
  std::string y = "y";
  std::string d1 = "d1";
  std::string covariate_prefix = "x";
  /// J + 1; zero means "infer from the data" (max y + 1, at least 2).
  int num_alternatives = 0;
};

Panel load_panel(std::istream& source, const CsvSchema& schema = {});
Panel load_panel_file(const std::string& path, const CsvSchema& schema = {});
void write_panel_csv(std::ostream& out, const Panel& panel);

/// Duration state entering the period after a choice of `y_prev` made
/// with incoming state `d_prev`: the length of the current run of 1s,
/// capped at d_max, and 0 after a 0.
inline int next_duration(int y_prev, int d_prev, int d_max) {
  if (y_prev != 1) return 0;
  return d_prev + 1 < d_max ? d_prev + 1 : d_max;
}

/// Durations d_1..d_T along a binary history with initial state d1.
std::vector<int> durations(std::span<const int> y, int d1, int d_max);

/// All contiguous windows of length T. Window ids are "origid#start" with
/// `start` the calendar index of the window's first period; each window's
/// d1 is rebuilt from the pre-window history.
Panel split_subhistories(const Panel& panel, std::size_t T, int d_max = 2);

/// Key of a (choice history, covariate history) cell.
struct HistoryKey {
  std::vector<int> y;
  std::string x_key;
  auto operator<=>(const HistoryKey&) const = default;
};

/// Relative frequencies of first-T-period histories, normalized within
/// each covariate-history key.
class HistoryDistribution {
 public:
  HistoryDistribution() = default;
  HistoryDistribution(std::size_t T, int num_alternatives) : T_(T), num_alternatives_(num_alternatives) {}

  std::size_t window_length() const { return T_; }
  int num_alternatives() const { return num_alternatives_; }
  /// Number of windows the frequencies were computed from.
  double count() const { return total_; }

  /// Adds `weight` windows of history y under covariate key x_key.
  void add(std::vector<int> y, const std::string& x_key = "", double weight = 1.0);

  /// P(history | x_key); zero for unseen cells.
  double prob(const std::vector<int>& y, const std::string& x_key = "") const;
  /// Share of windows carrying x_key.
  double key_share(const std::string& x_key) const;
  std::vector<std::string> x_keys() const;

  /// Distribution of the first T' periods.
  HistoryDistribution marginalize_prefix(std::size_t T_prime) const;

  /// (key, frequency) pairs, frequency normalized within the key.
  std::vector<std::pair<HistoryKey, double>> entries() const;

  nlohmann::json to_json() const;
  static HistoryDistribution from_json(const nlohmann::json& j);

 private:
  std::size_t T_ = 0;
  int num_alternatives_ = 2;
  std::map<HistoryKey, double> mass_;
  std::map<std::string, double> key_mass_;
  double total_ = 0.0;
};

/// Exact text key for a covariate block (17 significant digits per value).
std::string covariate_key(std::span<const double> x);

HistoryDistribution history_frequencies(const Panel& panel, std::size_t T, bool condition_on_x = false);

struct TransitionSummary {
  Eigen::MatrixXd matrix;           ///< P(y_{t+1}=j | y_t=k), rows k
  Eigen::VectorXd shares;           ///< pooled P(y=j)
  Eigen::VectorXd persistence;      ///< P(j|j) - P(j)
  std::vector<bool> row_defined;    ///< false when no transition leaves k
};

TransitionSummary empirical_transition_matrix(const Panel& panel);

}  // namespace feame
