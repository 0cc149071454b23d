#pragma once

#include <memory>
#include <span>
#include <vector>

namespace recbase {

/// Matern-5/2 correlation at scaled distance r.
double matern52(double r);

/// Expected improvement of a maximization problem over `best`.
double expected_improvement(double mean, double variance, double best, double xi);

/// Gaussian-process regression on inputs in the unit cube with a Matern-5/2
/// kernel. Targets are standardized; lengthscales are chosen by maximizing
/// the marginal likelihood over a fixed log grid (isotropic pass, then one
/// per-dimension pass), with the signal variance profiled out.
class GaussianProcess {
 public:
  struct Prediction {
    double mean;
    double variance;
  };

  explicit GaussianProcess(double jitter = 1e-6);
  ~GaussianProcess();
  GaussianProcess(GaussianProcess&&) noexcept;
  GaussianProcess& operator=(GaussianProcess&&) noexcept;

  void fit(const std::vector<std::vector<double>>& x, std::span<const double> y);

  /// Posterior of the latent function, in the units of y.
  Prediction predict(std::span<const double> x) const;

  std::span<const double> lengthscales() const;
  double y_scale() const;

 private:
  struct State;
  double jitter_;
  std::unique_ptr<State> state_;
};

}  // namespace recbase
