#include "recbase/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "recbase/errors.hpp"

namespace recbase {

double matern52(double r) {
  const double s = std::sqrt(5.0) * r;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double expected_improvement(double mean, double variance, double best, double xi) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double delta = mean - best - xi;
  if (sigma < 1e-12) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return delta * cdf + sigma * pdf;
}

struct GaussianProcess::State {
  Eigen::MatrixXd x;
  std::vector<double> lengthscales;
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd alpha;
  double y_mean = 0.0;
  double y_sd = 1.0;
  double signal = 1.0;
};

namespace {

double correlation(const Eigen::MatrixXd& x, Eigen::Index a, const double* b,
                   const std::vector<double>& ls) {
  double sq = 0.0;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double diff = (x(a, d) - b[d]) / ls[static_cast<std::size_t>(d)];
    sq += diff * diff;
  }
  return matern52(std::sqrt(sq));
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const std::vector<double>& ls, double jitter) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) row[static_cast<std::size_t>(d)] = x(i, d);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = correlation(x, j, row.data(), ls);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += jitter;
  }
  return k;
}

// Profiled log marginal likelihood (constants dropped).
double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& ls,
                      double jitter) {
  Eigen::LLT<Eigen::MatrixXd> chol(gram(x, ls, jitter));
  if (chol.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = chol.solve(y);
  const double n = static_cast<double>(y.size());
  const double signal = std::max(y.dot(alpha) / n, 1e-12);
  const Eigen::MatrixXd l = chol.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
  return -0.5 * n * std::log(signal) - log_det;
}

std::vector<double> lengthscale_grid() {
  std::vector<double> grid;
  constexpr int kSteps = 20;
  const double lo = std::log(0.03);
  const double hi = std::log(3.0);
  for (int s = 0; s < kSteps; ++s) grid.push_back(std::exp(lo + (hi - lo) * s / (kSteps - 1)));
  return grid;
}

}  // namespace

GaussianProcess::GaussianProcess(double jitter) : jitter_(jitter) {}
GaussianProcess::~GaussianProcess() = default;
GaussianProcess::GaussianProcess(GaussianProcess&&) noexcept = default;
GaussianProcess& GaussianProcess::operator=(GaussianProcess&&) noexcept = default;

void GaussianProcess::fit(const std::vector<std::vector<double>>& x, std::span<const double> y) {
  if (x.empty() || x.size() != y.size()) throw InvalidConfig("GP fit needs matching non-empty data");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(x.front().size());
  auto st = std::make_unique<State>();
  st->x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) st->x(i, j) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  st->y_mean = mean;
  st->y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
  Eigen::VectorXd ys(n);
  for (Eigen::Index i = 0; i < n; ++i) ys(i) = (y[static_cast<std::size_t>(i)] - mean) / st->y_sd;

  const auto grid = lengthscale_grid();
  std::vector<double> ls(static_cast<std::size_t>(d), grid.front());
  double best = -std::numeric_limits<double>::infinity();
  for (double g : grid) {
    std::vector<double> trial(static_cast<std::size_t>(d), g);
    const double ll = log_likelihood(st->x, ys, trial, jitter_);
    if (ll > best) {
      best = ll;
      ls = trial;
    }
  }
  if (d > 1) {
    for (std::size_t dim = 0; dim < ls.size(); ++dim) {
      for (double g : grid) {
        auto trial = ls;
        trial[dim] = g;
        const double ll = log_likelihood(st->x, ys, trial, jitter_);
        if (ll > best) {
          best = ll;
          ls = trial;
        }
      }
    }
  }

  st->lengthscales = ls;
  st->chol.compute(gram(st->x, ls, jitter_));
  if (st->chol.info() != Eigen::Success) throw Error("GP covariance is not positive definite");
  st->alpha = st->chol.solve(ys);
  st->signal = std::max(ys.dot(st->alpha) / static_cast<double>(n), 1e-12);
  state_ = std::move(st);
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> x) const {
  if (!state_) throw Error("GP used before fit");
  const auto& st = *state_;
  const Eigen::Index n = st.x.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = correlation(st.x, i, x.data(), st.lengthscales);
  const double mean = k.dot(st.alpha);
  const Eigen::VectorXd v = st.chol.matrixL().solve(k);
  const double var = std::max(st.signal * (1.0 - v.squaredNorm()), 0.0);
  return {st.y_mean + st.y_sd * mean, var * st.y_sd * st.y_sd};
}

std::span<const double> GaussianProcess::lengthscales() const {
  if (!state_) return {};
  return state_->lengthscales;
}

double GaussianProcess::y_scale() const { return state_ ? state_->y_sd : 1.0; }

}  // namespace recbase
