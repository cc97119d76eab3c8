#include "saopt/paramopt.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace saopt {

namespace {

constexpr double kLogLengthMin = -3.912023005428146;  // log 0.02
constexpr double kLogLengthMax = 1.6094379124341003;  // log 5
constexpr double kLogSignalMin = -2.995732273553991;  // log 0.05
constexpr double kLogSignalMax = 2.995732273553991;   // log 20

std::size_t hyper_fit_size(std::size_t n) {
  if (n < 4) return n;
  std::size_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::string SurrogateKey::to_string() const { return std::to_string(situation) + "|" + strategy; }

Eigen::VectorXd encode(const ParameterSetting& setting, const std::vector<ParameterOptionSpec>& specs) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    auto it = setting.find(s.name);
    double v = it == setting.end() ? 0.5 * (s.min + s.max) : it->second;
    u[static_cast<Eigen::Index>(i)] = std::clamp((v - s.min) / (s.max - s.min), 0.0, 1.0);
  }
  return u;
}

ParameterSetting decode(const Eigen::VectorXd& u, const std::vector<ParameterOptionSpec>& specs) {
  ParameterSetting out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    double x = std::clamp(u[static_cast<Eigen::Index>(i)], 0.0, 1.0);
    double v = x == 0.0 ? s.min : x == 1.0 ? s.max : s.min + x * (s.max - s.min);
    if (s.data_type == DataType::Int) v = std::round(v);
    out[s.name] = std::clamp(v, s.min, s.max);
  }
  return out;
}

Eigen::VectorXd halton(std::size_t index, std::size_t dim, const Eigen::VectorXd& shift) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  Eigen::VectorXd p(static_cast<Eigen::Index>(dim));
  for (std::size_t d = 0; d < dim; ++d) {
    const int base = primes[d % 16];
    double f = 1.0, r = 0.0;
    for (std::size_t i = index + 1; i > 0; i /= static_cast<std::size_t>(base)) {
      f /= base;
      r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    }
    double v = r + (shift.size() > 0 ? shift[static_cast<Eigen::Index>(d)] : 0.0);
    p[static_cast<Eigen::Index>(d)] = v - std::floor(v);
  }
  return p;
}

// ---------------------------------------------------------------- GP

double GaussianProcess::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& h) const {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    double t = (a[d] - b[d]) / std::exp(h.log_lengthscales[d]);
    r2 += t * t;
  }
  double r = std::sqrt(5.0 * r2);
  return std::exp(h.log_signal_variance) * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

double GaussianProcess::log_marginal_likelihood(const GpHyper& h) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  if (n == 0) return 0.0;
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(x_[i], x_[j], h);
    k(i, i) += kJitter;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = (y_[i] - y_mean_) / y_scale_;
  Eigen::VectorXd alpha = llt.solve(y);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
  return -0.5 * y.dot(alpha) - log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

void GaussianProcess::fit_hyperparameters(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y, std::uint64_t seed) {
  x_ = x;
  y_ = y;
  const auto dim = x.empty() ? Eigen::Index{0} : x.front().size();
  chol_.resize(0, 0);
  refresh_targets();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ul(kLogLengthMin, kLogLengthMax), us(kLogSignalMin, kLogSignalMax);

  auto clamp_hyper = [&](GpHyper& h) {
    for (Eigen::Index d = 0; d < dim; ++d) h.log_lengthscales[d] = std::clamp(h.log_lengthscales[d], kLogLengthMin, kLogLengthMax);
    h.log_signal_variance = std::clamp(h.log_signal_variance, kLogSignalMin, kLogSignalMax);
  };
  std::vector<GpHyper> starts;
  starts.push_back({Eigen::VectorXd::Constant(dim, std::log(0.3)), 0.0});
  for (int s = 0; s < 6; ++s) {
    GpHyper h{Eigen::VectorXd(dim), us(rng)};
    for (Eigen::Index d = 0; d < dim; ++d) h.log_lengthscales[d] = ul(rng);
    starts.push_back(h);
  }
  GpHyper best = starts.front();
  double best_lml = -std::numeric_limits<double>::infinity();
  for (auto h : starts) {
    double f = log_marginal_likelihood(h);
    // coordinate pattern search in log space
    for (double step = 0.5; step >= 0.02;) {
      bool improved = false;
      for (Eigen::Index c = 0; c <= dim; ++c) {
        for (double dir : {1.0, -1.0}) {
          GpHyper t = h;
          (c < dim ? t.log_lengthscales[c] : t.log_signal_variance) += dir * step;
          clamp_hyper(t);
          double ft = log_marginal_likelihood(t);
          if (ft > f + 1e-10) {
            h = t;
            f = ft;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (f > best_lml) {
      best_lml = f;
      best = h;
    }
  }
  hyper_ = best;
}

void GaussianProcess::set_data(const std::vector<Eigen::VectorXd>& x, const std::vector<double>& y) {
  x_.clear();
  y_.clear();
  chol_.resize(0, 0);
  for (std::size_t i = 0; i < x.size(); ++i) add_point(x[i], y[i]);
  if (x.empty()) refresh_targets();
}

void GaussianProcess::add_point(const Eigen::VectorXd& x, double y) {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel(x_[i], x, hyper_);
  Eigen::VectorXd l = n > 0 ? Eigen::VectorXd(chol_.triangularView<Eigen::Lower>().solve(kx)) : Eigen::VectorXd(0);
  double d = kernel(x, x, hyper_) + kJitter - l.squaredNorm();
  Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n + 1, n + 1);
  next.topLeftCorner(n, n) = chol_;
  next.block(n, 0, 1, n) = l.transpose();
  next(n, n) = std::sqrt(std::max(d, 1e-12));
  chol_ = std::move(next);
  x_.push_back(x);
  y_.push_back(y);
  refresh_targets();
}

void GaussianProcess::refresh_targets() {
  const auto n = static_cast<Eigen::Index>(y_.size());
  if (n == 0) {
    y_mean_ = 0.0;
    y_scale_ = 1.0;
    alpha_.resize(0);
    return;
  }
  y_mean_ = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : y_) var += (v - y_mean_) * (v - y_mean_);
  y_scale_ = std::sqrt(var / static_cast<double>(n));
  if (y_scale_ < 1e-12) y_scale_ = 1.0;
  if (chol_.rows() != n) return;
  Eigen::VectorXd ys(n);
  for (Eigen::Index i = 0; i < n; ++i) ys[i] = (y_[i] - y_mean_) / y_scale_;
  auto lower = chol_.triangularView<Eigen::Lower>();
  alpha_ = lower.transpose().solve(lower.solve(ys));
}

std::pair<double, double> GaussianProcess::predict(const Eigen::VectorXd& x) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  if (n == 0) return {0.0, std::sqrt(std::exp(hyper_.log_signal_variance))};
  Eigen::VectorXd kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel(x_[i], x, hyper_);
  double mean = kx.dot(alpha_);
  Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kx);
  double var = std::max(kernel(x, x, hyper_) - v.squaredNorm(), 0.0);
  return {y_mean_ + y_scale_ * mean, y_scale_ * std::sqrt(var)};
}

double GaussianProcess::expected_improvement(const Eigen::VectorXd& x, double best, double xi) const {
  auto [mu, sd] = predict(x);
  double m = (mu - best) / y_scale_ - xi;
  double s = sd / y_scale_;
  if (s < 1e-12) return std::max(m, 0.0);
  double z = m / s;
  return m * normal_cdf(z) + s * normal_pdf(z);
}

// ---------------------------------------------------------------- optimizer

ParameterOptimizer::ParameterOptimizer(std::uint64_t seed, OptimizerOptions options) : seed_(seed), options_(options) {}

std::uint64_t ParameterOptimizer::key_seed(const SurrogateKey& key) const { return seed_ ^ fnv1a(key.to_string()); }

SurrogateState& ParameterOptimizer::activate(const SurrogateKey& key, const std::function<std::vector<Evaluation>()>& rebuild) {
  auto it = states_.find(key);
  if (it != states_.end()) return it->second;
  SurrogateState& s = states_[key];
  s.key = key;
  if (rebuild) s.evaluations = rebuild();
  return s;
}

void ParameterOptimizer::observe(const SurrogateKey& key, const ParameterSetting& setting, double score) {
  SurrogateState& s = activate(key);
  s.evaluations.push_back({setting, score});
}

const SurrogateState* ParameterOptimizer::state(const SurrogateKey& key) const {
  auto it = states_.find(key);
  return it == states_.end() ? nullptr : &it->second;
}

void ParameterOptimizer::sync_model(SurrogateState& s) {
  const std::size_t n = s.evaluations.size();
  const std::size_t target = hyper_fit_size(n);
  auto encoded = [&](std::size_t count, std::vector<Eigen::VectorXd>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < count; ++i) {
      x.push_back(encode(s.evaluations[i].setting, s.specs));
      y.push_back(s.evaluations[i].score);
    }
  };
  if (!s.model_ready || s.fitted_on != target) {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> y;
    encoded(target, x, y);
    s.model.fit_hyperparameters(x, y, key_seed(s.key) ^ (0x9e3779b97f4a7c15ull * target));
    x.clear();
    y.clear();
    encoded(n, x, y);
    s.model.set_data(x, y);
    s.fitted_on = target;
    s.model_ready = true;
    return;
  }
  for (std::size_t i = s.model.size(); i < n; ++i) s.model.add_point(encode(s.evaluations[i].setting, s.specs), s.evaluations[i].score);
}

ParameterSetting ParameterOptimizer::propose(const SurrogateKey& key, const std::vector<ParameterOptionSpec>& specs,
                                             const ParameterSetting& current) {
  SurrogateState& s = activate(key);
  if (specs.empty()) return {};
  if (s.specs != specs) {
    s.specs = specs;
    s.model_ready = false;
  }
  const std::size_t n = s.evaluations.size();
  if (n == 0) return current;

  const std::size_t dim = specs.size();
  const std::uint64_t kseed = key_seed(key);
  std::mt19937_64 shift_rng(kseed);
  Eigen::VectorXd shift(static_cast<Eigen::Index>(dim));
  for (std::size_t d = 0; d < dim; ++d) shift[static_cast<Eigen::Index>(d)] = std::uniform_real_distribution<double>(0, 1)(shift_rng);
  if (n < options_.initial_points) return decode(halton(n, dim, shift), specs);

  sync_model(s);
  std::mt19937_64 rng(kseed ^ (0xbf58476d1ce4e5b9ull * n));
  Eigen::VectorXd cand_shift(static_cast<Eigen::Index>(dim));
  for (std::size_t d = 0; d < dim; ++d) cand_shift[static_cast<Eigen::Index>(d)] = std::uniform_real_distribution<double>(0, 1)(rng);
  std::vector<Eigen::VectorXd> candidates;
  for (std::size_t i = 0; i < options_.candidates; ++i) candidates.push_back(halton(i, dim, cand_shift));

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (s.evaluations[i].score > s.evaluations[best_i].score) best_i = i;
  }
  const double best = s.evaluations[best_i].score;
  Eigen::VectorXd incumbent = encode(s.evaluations[best_i].setting, specs);
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (std::size_t p = 0; p < options_.incumbent_perturbations; ++p) {
    Eigen::VectorXd c = incumbent;
    auto d = static_cast<Eigen::Index>(p % dim);
    c[d] = std::clamp(c[d] + jitter(rng), 0.0, 1.0);
    candidates.push_back(c);
  }

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) scored.emplace_back(s.model.expected_improvement(candidates[i], best, options_.exploration), i);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  auto evaluated = [&](const ParameterSetting& p) {
    return std::any_of(s.evaluations.begin(), s.evaluations.end(), [&](const Evaluation& e) { return e.setting == p; });
  };
  ParameterSetting choice = decode(candidates[scored.front().second], specs);
  if (evaluated(choice)) {
    // one re-proposal: the best candidate that decodes to an unevaluated setting
    for (std::size_t r = 1; r < scored.size(); ++r) {
      auto alt = decode(candidates[scored[r].second], specs);
      if (!evaluated(alt)) {
        choice = alt;
        break;
      }
    }
  }
  return choice;
}

void ParameterOptimizer::save_snapshots(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [key, s] : states_) {
    nlohmann::json j;
    j["situation"] = key.situation;
    j["strategy"] = key.strategy;
    j["evaluations"] = nlohmann::json::array();
    for (const auto& e : s.evaluations) j["evaluations"].push_back({{"setting", e.setting}, {"score", e.score}});
    if (s.model_ready) {
      const auto& h = s.model.hyper();
      j["lengthscales"] = std::vector<double>(h.log_lengthscales.data(), h.log_lengthscales.data() + h.log_lengthscales.size());
      for (auto& v : j["lengthscales"]) v = std::exp(v.get<double>());
      j["signal_variance"] = std::exp(h.log_signal_variance);
      j["fitted_on"] = s.fitted_on;
    }
    std::string name = "surrogate_s" + std::to_string(key.situation) + "_" + key.strategy + ".json";
    std::ofstream(dir / name) << j.dump(1) << '\n';
  }
}

ParameterSetting propose(const SurrogateKey& key, const std::vector<Evaluation>& history, const std::vector<ParameterOptionSpec>& specs,
                         const ParameterSetting& current, std::uint64_t seed, OptimizerOptions options) {
  ParameterOptimizer opt(seed, options);
  opt.activate(key, [&] { return history; });
  return opt.propose(key, specs, current);
}

}  // namespace saopt
