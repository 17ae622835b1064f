#include "actok/scaling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "actok/error.hpp"
#include "actok/parallel.hpp"

namespace actok {

namespace {

struct Linear {
  double B = 0.0;
  double E = 0.0;
  double ssr = std::numeric_limits<double>::infinity();
};

// Best (B, E) with E >= 0 for loss = B x + E.
Linear solve_linear(const std::vector<double>& x, std::span<const ScalingObservation> obs) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += obs[i].loss;
    sxx += x[i] * x[i];
    sxy += x[i] * obs[i].loss;
  }
  Linear l;
  const double det = n * sxx - sx * sx;
  if (det > 0.0) {
    l.B = (n * sxy - sx * sy) / det;
    l.E = (sy - l.B * sx) / n;
  }
  if (!(det > 0.0) || l.E < 0.0) {
    l.E = 0.0;
    l.B = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  l.ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = l.B * x[i] + l.E - obs[i].loss;
    l.ssr += r * r;
  }
  return l;
}

double ssr(const ScalingParams& p, std::span<const ScalingObservation> obs) {
  double s = 0.0;
  for (const auto& o : obs) {
    const double r = predict_loss(p, o.U_D, o.R_D) - o.loss;
    s += r * r;
  }
  return s;
}

double log_space(double lo, double hi, std::size_t i, std::size_t n) {
  if (n == 1) return lo;
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
}

double parse_field(const std::string& s, std::size_t lineno, const char* what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": " + what + " is not a number: '" + s + "'");
  return v;
}

}  // namespace

void ScalingParams::validate() const {
  require(std::isfinite(B) && B > 0.0, "scaling B must be > 0");
  require(std::isfinite(beta) && beta > 0.0, "scaling beta must be > 0");
  require(std::isfinite(E) && E >= 0.0, "scaling E must be >= 0");
  require(std::isfinite(R_star) && R_star > 0.0, "scaling R_star must be > 0");
}

void ScalingFitOptions::validate() const {
  require(grid_beta >= 1 && grid_rstar >= 1, "scaling grid needs at least one cell per axis");
  require(beta_min > 0.0 && beta_min <= beta_max, "invalid beta grid bounds");
  require(rstar_min > 0.0 && rstar_min <= rstar_max, "invalid R_star grid bounds");
}

double effective_data(double U_D, double R_D, double R_star) {
  require(std::isfinite(U_D) && U_D > 0.0, "U_D must be > 0");
  require(std::isfinite(R_D) && R_D >= 0.0, "R_D must be >= 0");
  require(R_star > 0.0 && !std::isnan(R_star), "R_star must be > 0");
  if (std::isinf(R_star)) return U_D + U_D * R_D;
  return U_D + U_D * R_star * -std::expm1(-R_D / R_star);
}

double predict_loss(const ScalingParams& p, double U_D, double R_D) {
  return p.B / std::pow(effective_data(U_D, R_D, p.R_star), p.beta) + p.E;
}

ScalingFitReport fit_scaling(std::span<const ScalingObservation> obs, const ScalingFitOptions& opt) {
  opt.validate();
  std::set<double> distinct_r;
  for (const auto& o : obs) {
    require(std::isfinite(o.U_D) && o.U_D > 0.0, "observation U_D must be > 0");
    require(std::isfinite(o.R_D) && o.R_D >= 0.0, "observation R_D must be >= 0");
    require(std::isfinite(o.loss), "observation loss must be finite");
    distinct_r.insert(o.R_D);
  }
  if (obs.size() < 4 || distinct_r.size() < 2)
    fail(ErrorKind::insufficient_data, "scaling fit needs at least 4 observations over at least 2 distinct R_D values");

  const std::size_t cells = opt.grid_beta * opt.grid_rstar;
  std::vector<Linear> grid(cells);
  parallel_for(cells, opt.threads, [&](std::size_t c) {
    const double beta = log_space(opt.beta_min, opt.beta_max, c / opt.grid_rstar, opt.grid_beta);
    const double rstar = log_space(opt.rstar_min, opt.rstar_max, c % opt.grid_rstar, opt.grid_rstar);
    std::vector<double> x(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) x[i] = std::pow(effective_data(obs[i].U_D, obs[i].R_D, rstar), -beta);
    grid[c] = solve_linear(x, obs);
  });
  std::size_t best = 0;
  for (std::size_t c = 1; c < cells; ++c)
    if (grid[c].ssr < grid[best].ssr) best = c;

  ScalingFitReport rep;
  rep.params = {grid[best].B, log_space(opt.beta_min, opt.beta_max, best / opt.grid_rstar, opt.grid_beta),
                grid[best].E, log_space(opt.rstar_min, opt.rstar_max, best % opt.grid_rstar, opt.grid_rstar)};
  rep.grid_best_residual = std::sqrt(grid[best].ssr);
  rep.residual_norm = rep.grid_best_residual;

  const auto [lo, hi] = std::minmax_element(obs.begin(), obs.end(),
                                            [](const auto& a, const auto& b) { return a.loss < b.loss; });
  const double spread = hi->loss - lo->loss;
  if (spread <= 1e-12 * std::max(1.0, std::abs(hi->loss)) || !(rep.params.B > 0.0)) {
    rep.degenerate = true;
    return rep;
  }

  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::Vector4d theta(std::log(rep.params.B), std::log(rep.params.beta), std::log(rep.params.R_star), rep.params.E);
  auto params_of = [](const Eigen::Vector4d& t) {
    return ScalingParams{std::exp(t[0]), std::exp(t[1]), std::max(0.0, t[3]), std::exp(t[2])};
  };
  double cur = ssr(params_of(theta), obs);
  double lambda = 1e-3;
  Eigen::MatrixXd J(n, 4);
  Eigen::VectorXd r(n);
  for (rep.iterations = 0; rep.iterations < opt.max_iterations; ++rep.iterations) {
    const ScalingParams p = params_of(theta);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& o = obs[static_cast<std::size_t>(i)];
      const double d = effective_data(o.U_D, o.R_D, p.R_star);
      const double t = p.B * std::pow(d, -p.beta);
      const double e = std::exp(-o.R_D / p.R_star);
      const double dd_drstar = o.U_D * (-std::expm1(-o.R_D / p.R_star) - (o.R_D / p.R_star) * e);
      r[i] = t + p.E - o.loss;
      J(i, 0) = t;
      J(i, 1) = -p.beta * std::log(d) * t;
      J(i, 2) = -p.beta * t / d * dd_drstar * p.R_star;
      J(i, 3) = 1.0;
    }
    const Eigen::Vector4d g = J.transpose() * r;
    if (g.cwiseAbs().maxCoeff() <= 1e-30) {
      rep.converged = true;
      break;
    }
    Eigen::Vector4d scale = J.colwise().norm().transpose();
    for (int k = 0; k < 4; ++k) scale[k] = std::max(scale[k], 1e-300);

    bool accepted = false;
    Eigen::Vector4d step;
    double next = cur;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd A(n + 4, 4);
      Eigen::VectorXd b(n + 4);
      A.topRows(n) = J;
      A.bottomRows(4) = (std::sqrt(lambda) * scale).asDiagonal();
      b.head(n) = -r;
      b.tail(4).setZero();
      step = A.colPivHouseholderQr().solve(b);
      Eigen::Vector4d cand = theta + step;
      cand[3] = std::max(0.0, cand[3]);
      next = ssr(params_of(cand), obs);
      if (std::isfinite(next) && next < cur) {
        step = cand - theta;
        theta = cand;
        accepted = true;
        lambda = std::max(lambda / 10.0, 1e-15);
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision.
      rep.converged = true;
      break;
    }
    const double rel_drop = (cur - next) / std::max(cur, 1e-300);
    cur = next;
    if (step.norm() <= 1e-14 * (theta.norm() + 1e-14) || rel_drop <= 1e-15) {
      rep.converged = true;
      ++rep.iterations;
      break;
    }
  }
  if (cur <= grid[best].ssr) {
    rep.params = params_of(theta);
    rep.residual_norm = std::sqrt(cur);
  }
  return rep;
}

std::vector<ScalingObservation> read_observations_csv(std::istream& in) {
  std::vector<ScalingObservation> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (!header) {
      header = true;
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      if (fields.size() == 3 && trim(fields[0]) == "U_D" && trim(fields[1]) == "R_D" && trim(fields[2]) == "loss")
        continue;
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": expected header 'U_D,R_D,loss'");
    }
    if (fields.size() != 3)
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": expected 3 fields, got " + std::to_string(fields.size()));
    ScalingObservation o{parse_field(fields[0], lineno, "U_D"), parse_field(fields[1], lineno, "R_D"),
                         parse_field(fields[2], lineno, "loss")};
    if (!(o.U_D > 0.0) || !(o.R_D >= 0.0) || !std::isfinite(o.loss) || !std::isfinite(o.U_D) || !std::isfinite(o.R_D))
      fail(ErrorKind::validation, "line " + std::to_string(lineno) + ": values out of range");
    out.push_back(o);
  }
  return out;
}

std::vector<ScalingObservation> read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  return read_observations_csv(in);
}

std::string observations_to_csv(std::span<const ScalingObservation> obs) {
  std::ostringstream os;
  os << "U_D,R_D,loss\n";
  char buf[128];
  for (const auto& o : obs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", o.U_D, o.R_D, o.loss);
    os << buf;
  }
  return os.str();
}

}  // namespace actok
