#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace actok {

struct ScalingParams {
  double B = 1.0;
  double beta = 0.5;
  double E = 0.0;
  double R_star = 1.0;

  void validate() const;
};

struct ScalingObservation {
  double U_D = 0.0;   // unique tokens
  double R_D = 0.0;   // repetitions
  double loss = 0.0;
};

/// D' = U + U R*(1 - exp(-R / R*)).
double effective_data(double U_D, double R_D, double R_star);

/// B / D'^beta + E.
double predict_loss(const ScalingParams& p, double U_D, double R_D);

struct ScalingFitOptions {
  std::size_t grid_beta = 50;
  std::size_t grid_rstar = 50;
  double beta_min = 0.01;
  double beta_max = 2.0;
  double rstar_min = 0.1;
  double rstar_max = 100.0;
  std::size_t max_iterations = 500;
  unsigned threads = 1;

  void validate() const;
};

struct ScalingFitReport {
  ScalingParams params;
  double residual_norm = 0.0;       // sqrt of the sum of squared residuals
  double grid_best_residual = 0.0;  // same, at the best seeding cell
  std::size_t iterations = 0;
  bool converged = false;
  // Set when the losses carry no signal (constant) or the best linear fit
  // has no positive B; params are then the seeding values.
  bool degenerate = false;
};

/// Least-squares fit: a log-spaced (beta, R*) grid with (B, E) solved in closed
/// form per cell (E clamped at 0), then Levenberg–Marquardt on
/// (log B, log beta, log R*, E) accepting only steps that lower the residual.
ScalingFitReport fit_scaling(std::span<const ScalingObservation> obs, const ScalingFitOptions& opt = {});

/// CSV with header U_D,R_D,loss. Errors name the offending line.
std::vector<ScalingObservation> read_observations_csv(std::istream& in);
std::vector<ScalingObservation> read_observations_csv(const std::string& path);
std::string observations_to_csv(std::span<const ScalingObservation> obs);

}  // namespace actok
