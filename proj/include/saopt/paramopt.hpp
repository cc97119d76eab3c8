#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saopt/ddm.hpp"
#include "saopt/types.hpp"

namespace saopt {

struct Evaluation {
  ParameterSetting setting;
  double score = 0.0;
};

struct SurrogateKey {
  SituationId situation = kNoise;
  std::string strategy;

  auto operator<=>(const SurrogateKey&) const = default;
  std::string to_string() const;
};

// Unit-cube encoding of a setting in declaration order of `specs`.
Eigen::VectorXd encode(const ParameterSetting& setting, const std::vector<ParameterOptionSpec>& specs);
// Inverse of encode: clamps to bounds, rounds int parameters.
ParameterSetting decode(const Eigen::VectorXd& u, const std::vector<ParameterOptionSpec>& specs);

// Halton point `index` (0-based, skipping the origin) in `dim` dimensions,
// rotated by `shift` modulo 1.
Eigen::VectorXd halton(std::size_t index, std::size_t dim, const Eigen::VectorXd& shift);

struct GpHyper {
  Eigen::VectorXd log_lengthscales;
  double log_signal_variance = 0.0;
};

// Gaussian process with a Matern-5/2 ARD kernel and a constant mean on
// standardized targets. Hyperparameters stay fixed between fits, so adding a
// point only extends the Cholesky factor.
class GaussianProcess {
 public:
  static constexpr double kJitter = 1e-6;

  void fit_hyperparameters(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y, std::uint64_t seed);
  void set_data(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y);
  void add_point(const Eigen::VectorXd& x, double y);

  // Posterior mean and standard deviation in the original target units.
  std::pair<double, double> predict(const Eigen::VectorXd& x) const;
  double expected_improvement(const Eigen::VectorXd& x, double best, double xi = 0.01) const;

  double log_marginal_likelihood(const GpHyper& h) const;
  const GpHyper& hyper() const { return hyper_; }
  void set_hyper(GpHyper h) { hyper_ = std::move(h); }
  std::size_t size() const { return x_.size(); }

 private:
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& h) const;
  void refresh_targets();

  GpHyper hyper_;
  std::vector<Eigen::VectorXd> x_;
  std::vector<double> y_;
  Eigen::MatrixXd chol_;  // lower triangular
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
};

struct SurrogateState {
  SurrogateKey key;
  std::vector<Evaluation> evaluations;
  std::vector<ParameterOptionSpec> specs;  // set on the first proposal
  GaussianProcess model;
  std::size_t fitted_on = 0;  // evaluations used for the current hyperparameters
  bool model_ready = false;
};

struct OptimizerOptions {
  std::size_t initial_points = 3;
  std::size_t candidates = 512;
  std::size_t incumbent_perturbations = 8;
  double exploration = 0.01;
};

// Per (situation, strategy) Bayesian optimization of the parameter setting.
class ParameterOptimizer {
 public:
  explicit ParameterOptimizer(std::uint64_t seed = 1, OptimizerOptions options = {});

  // Returns the cached state, rebuilds it from `rebuild` when given, or starts empty.
  SurrogateState& activate(const SurrogateKey& key, const std::function<std::vector<Evaluation>()>& rebuild = {});
  void observe(const SurrogateKey& key, const ParameterSetting& setting, double score);
  // Drops the cached state so the next activate rebuilds it.
  void forget(const SurrogateKey& key) { states_.erase(key); }
  ParameterSetting propose(const SurrogateKey& key, const std::vector<ParameterOptionSpec>& specs, const ParameterSetting& current);

  const SurrogateState* state(const SurrogateKey& key) const;
  const std::map<SurrogateKey, SurrogateState>& states() const { return states_; }

  // One JSON file per key: evaluations and fitted hyperparameters.
  void save_snapshots(const std::filesystem::path& dir) const;

 private:
  void sync_model(SurrogateState& s);
  std::uint64_t key_seed(const SurrogateKey& key) const;

  std::uint64_t seed_;
  OptimizerOptions options_;
  std::map<SurrogateKey, SurrogateState> states_;
};

// Stateless form: the proposal for `history` equals what an optimizer that
// observed the same history would return.
ParameterSetting propose(const SurrogateKey& key, const std::vector<Evaluation>& history, const std::vector<ParameterOptionSpec>& specs,
                         const ParameterSetting& current, std::uint64_t seed = 1, OptimizerOptions options = {});

}  // namespace saopt
