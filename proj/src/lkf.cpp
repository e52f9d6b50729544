#include "certsched/lkf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certsched {
namespace {

constexpr int kBlock = 3;

void check_grid_args(int h_ul, int h_dl, int depth) {
  if (depth < 0) throw std::invalid_argument("lifted matrix: depth must be >= 0");
  if (h_ul < 0 || h_dl < 0 || h_ul > depth || h_dl > depth) {
    throw std::invalid_argument("lifted matrix: delay index outside [0, depth]");
  }
}

// Shift skeleton plus per-column feedback weights accumulated first, so that
// coinciding columns merge into one exact weight (e.g. depth 0 gives A - BK
// bit for bit).
Eigen::MatrixXd assemble(int depth, const Eigen::Matrix3d& bk,
                         const std::vector<std::pair<int, double>>& weights) {
  const int dim = kBlock * (depth + 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 1; i <= depth; ++i) {
    m.block(kBlock * i, kBlock * (i - 1), kBlock, kBlock) =
        Eigen::Matrix3d::Identity();
  }
  m.block(0, 0, kBlock, kBlock) = Eigen::Matrix3d::Identity();

  std::vector<double> column(static_cast<std::size_t>(depth) + 1, 0.0);
  for (const auto& [col, w] : weights) column[static_cast<std::size_t>(col)] += w;
  for (int c = 0; c <= depth; ++c) {
    if (column[static_cast<std::size_t>(c)] != 0.0) {
      m.block(0, kBlock * c, kBlock, kBlock) -=
          column[static_cast<std::size_t>(c)] * bk;
    }
  }
  return m;
}

}  // namespace

Eigen::MatrixXd build_lifted_matrix(LinkOutcome outcome, int h_ul, int h_dl,
                                    int depth, const Eigen::Matrix3d& bk,
                                    double theta) {
  check_grid_args(h_ul, h_dl, depth);
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("lifted matrix: theta must lie in [0, 1]");
  }
  const double fresh = 1.0 - theta;
  const double half = 0.5 * theta;
  const auto stale = [depth](int col) { return std::min(col + 1, depth); };
  switch (outcome) {
    case LinkOutcome::kBidirectional:
      return assemble(depth, bk, {{0, fresh}, {h_ul, half}, {h_dl, half}});
    case LinkOutcome::kUplinkOnly:
      // Downlink failed: the applied command is one cycle staler, and so is
      // the downlink share; the refreshed estimate keeps its column.
      return assemble(depth, bk,
                      {{stale(0), fresh}, {h_ul, half}, {stale(h_dl), half}});
    case LinkOutcome::kDownlinkOnly:
      // Uplink failed: the delivered command was built on a one-refresh-older
      // estimate.
      return assemble(depth, bk,
                      {{stale(0), fresh}, {stale(h_ul), half}, {h_dl, half}});
    case LinkOutcome::kNone:
      // Identical to the first failure-run matrix: the whole authority sits
      // at the once-shifted delay indices.
      return assemble(depth, bk, {{stale(h_ul), 0.5}, {stale(h_dl), 0.5}});
  }
  throw std::invalid_argument("lifted matrix: unknown outcome");
}

Eigen::MatrixXd build_run_matrix(int j, int h_ul, int h_dl, int depth,
                                 const Eigen::Matrix3d& bk) {
  check_grid_args(h_ul, h_dl, depth);
  if (j < 1) throw std::invalid_argument("run matrix: j must be >= 1");
  const int c_ul = std::min(h_ul + j, depth);
  const int c_dl = std::min(h_dl + j, depth);
  return assemble(depth, bk, {{c_ul, 0.5}, {c_dl, 0.5}});
}

double mode_factor_raw(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x) {
  if (m.rows() != m.cols() || x.rows() != x.cols() || m.rows() != x.rows()) {
    throw std::invalid_argument("mode_factor_raw: dimension mismatch");
  }
  Eigen::MatrixXd lhs = m.transpose() * x * m;
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
  Eigen::MatrixXd rhs = 0.5 * (x + x.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      lhs, rhs, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("mode_factor_raw: eigensolver failed (x not PD?)");
  }
  return es.eigenvalues().maxCoeff();
}

namespace {

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_decrease_residual(const std::vector<Eigen::MatrixXd>& modes,
                             const Eigen::MatrixXd& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& m : modes) {
    Eigen::MatrixXd s = m.transpose() * x * m - x;
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return worst;
}

Eigen::MatrixXd clip_to_cone(const Eigen::MatrixXd& x, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (x + x.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::optional<LkfSolution> solve_lkf(const Eigen::Matrix3d& bk, int h_ul_max,
                                     int h_dl_max, const LkfOptions& opts) {
  if (h_ul_max < 0 || h_dl_max < 0) {
    throw std::invalid_argument("solve_lkf: negative delay bound");
  }
  if (!(opts.epsilon > 0.0)) {
    throw std::invalid_argument("solve_lkf: epsilon must be > 0");
  }
  const int depth = std::max(h_ul_max, h_dl_max);
  const int dim = kBlock * (depth + 1);

  std::vector<Eigen::MatrixXd> modes;
  double worst_radius = 0.0;
  int worst_index = 0;
  for (int a = 0; a <= h_ul_max; ++a) {
    for (int b = 0; b <= h_dl_max; ++b) {
      modes.push_back(build_lifted_matrix(LinkOutcome::kBidirectional, a, b,
                                          depth, bk, opts.theta));
      const double r = spectral_radius(modes.back());
      if (r >= 1.0 - 1e-12) return std::nullopt;  // no common form can contract
      if (r > worst_radius) {
        worst_radius = r;
        worst_index = static_cast<int>(modes.size()) - 1;
      }
    }
  }

  // Warm start: discrete Lyapunov form of the slowest grid mode, by fixed
  // point X <- M'XM + I (geometric convergence at worst_radius^2).
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(dim, dim);
  {
    const Eigen::MatrixXd& m = modes[static_cast<std::size_t>(worst_index)];
    for (int it = 0; it < 4000; ++it) {
      Eigen::MatrixXd next =
          m.transpose() * x * m + Eigen::MatrixXd::Identity(dim, dim);
      const double delta = (next - x).norm();
      x = 0.5 * (next + next.transpose());
      if (delta < 1e-12 * x.norm()) break;
    }
  }
  x *= static_cast<double>(dim) / x.trace();

  // Minimize the worst decrease residual over trace-normalized x until it is
  // strictly negative; homogeneity then buys the exact margins.
  double best_residual = max_decrease_residual(modes, x);
  Eigen::MatrixXd best_x = x;
  int used = 0;
  const double target = -1e-3;
  for (int it = 0; it < opts.max_iterations && best_residual > target; ++it) {
    ++used;
    // Worst mode and its top eigenvector give a subgradient of the residual.
    double worst = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd top;
    Eigen::MatrixXd worst_m;
    for (const auto& m : modes) {
      Eigen::MatrixXd s = m.transpose() * x * m - x;
      s = 0.5 * (s + s.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
      const double lam = es.eigenvalues().maxCoeff();
      if (lam > worst) {
        worst = lam;
        top = es.eigenvectors().col(dim - 1);
        worst_m = m;
      }
    }
    Eigen::VectorXd mv = worst_m * top;
    Eigen::MatrixXd grad = mv * mv.transpose() - top * top.transpose();
    const double gn = grad.norm();
    if (gn < 1e-15) break;
    const double step = 0.5 / (1.0 + 0.05 * static_cast<double>(it));
    x = clip_to_cone(x - (step / gn) * grad, 1e-9);
    x *= static_cast<double>(dim) / x.trace();
    const double res = max_decrease_residual(modes, x);
    if (res < best_residual) {
      best_residual = res;
      best_x = x;
    }
  }
  if (!(best_residual < 0.0)) return std::nullopt;

  x = best_x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(x, Eigen::EigenvaluesOnly);
  const double lam_min = ex.eigenvalues().minCoeff();
  const double margin = -best_residual;
  x *= opts.epsilon / std::min(margin, lam_min);

  if (opts.reduce_trace) {
    // Best-effort trace reduction: pull toward the epsilon floor while the
    // exact decrease margin survives.
    const Eigen::MatrixXd floor_m =
        opts.epsilon * Eigen::MatrixXd::Identity(dim, dim);
    for (double gamma : {0.3, 0.5, 0.7, 0.9}) {
      Eigen::MatrixXd cand = floor_m + gamma * (x - floor_m);
      if (max_decrease_residual(modes, cand) <= -opts.epsilon) {
        x = cand;
        break;
      }
    }
  }

  // Normalize up so lambda_min(x) >= 1: keeps V in squared-meter units and
  // only widens the decrease margin (scaling by c >= 1).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> en(x, Eigen::EigenvaluesOnly);
  const double lm = en.eigenvalues().minCoeff();
  if (lm < 1.0) x *= 1.0 / lm;

  LkfSolution sol;
  sol.x = 0.5 * (x + x.transpose());
  sol.epsilon = opts.epsilon;
  sol.theta = opts.theta;
  sol.h_ul_max = h_ul_max;
  sol.h_dl_max = h_dl_max;
  sol.depth = depth;
  sol.bk = bk;
  sol.max_residual = max_decrease_residual(modes, sol.x) + opts.epsilon;
  sol.iterations = used;
  if (sol.max_residual > 1e-8) return std::nullopt;
  return sol;
}

double CertifiedFactors::run(int j) const {
  if (j < 1) throw std::invalid_argument("run factor: j must be >= 1");
  const int n = static_cast<int>(runs.size());
  if (n == 0) throw std::logic_error("run factor: empty table");
  return runs[static_cast<std::size_t>(std::min(j, n) - 1)];
}

EnvelopeTable::EnvelopeTable(LkfSolution solution)
    : solution_(std::move(solution)) {
  const int hu = solution_.h_ul_max;
  const int hd = solution_.h_dl_max;
  const int depth = solution_.depth;
  const int run_count = std::max(depth, 1);
  const auto& bk = solution_.bk;
  const auto& x = solution_.x;

  auto grid = [&](auto fill) {
    Grid g(static_cast<std::size_t>(hu) + 1,
           std::vector<double>(static_cast<std::size_t>(hd) + 1, 0.0));
    for (int a = 0; a <= hu; ++a)
      for (int b = 0; b <= hd; ++b)
        g[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = fill(a, b);
    return g;
  };

  c11_ = grid([&](int a, int b) {
    return mode_factor_raw(build_lifted_matrix(LinkOutcome::kBidirectional, a,
                                               b, depth, bk, solution_.theta),
                           x);
  });
  c10_ = grid([&](int a, int b) {
    const double f10 = mode_factor_raw(
        build_lifted_matrix(LinkOutcome::kUplinkOnly, a, b, depth, bk,
                            solution_.theta),
        x);
    return std::max(c11_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)],
                    f10);
  });
  c01_ = grid([&](int a, int b) {
    const double f01 = mode_factor_raw(
        build_lifted_matrix(LinkOutcome::kDownlinkOnly, a, b, depth, bk,
                            solution_.theta),
        x);
    return std::max(c11_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)],
                    f01);
  });
  c00_ = grid([&](int a, int b) {
    const double f00 = mode_factor_raw(
        build_lifted_matrix(LinkOutcome::kNone, a, b, depth, bk,
                            solution_.theta),
        x);
    const double upper =
        std::max(c10_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)],
                 c01_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
    return std::max(upper, f00);
  });

  run_grids_.reserve(static_cast<std::size_t>(run_count));
  for (int j = 1; j <= run_count; ++j) {
    run_grids_.push_back(grid([&](int a, int b) {
      return mode_factor_raw(build_run_matrix(j, a, b, depth, bk), x);
    }));
  }
  // Saturated failure-run growth at the maximum admissible delay: the run
  // matrix whose staleness indices have both reached the buffer depth.
  hold_ = std::max(
      1.0, mode_factor_raw(
               build_run_matrix(std::max(depth, 1), depth, depth, depth, bk), x));
}

CertifiedFactors EnvelopeTable::factors(int h_ul, int h_dl) const {
  if (h_ul < 0 || h_dl < 0 || h_ul > solution_.h_ul_max ||
      h_dl > solution_.h_dl_max) {
    throw std::invalid_argument("factors: timing outside the solved grid");
  }
  auto submax = [&](const Grid& g) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a <= h_ul; ++a)
      for (int b = 0; b <= h_dl; ++b)
        best = std::max(
            best, g[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
    return best;
  };
  CertifiedFactors f;
  f.a11 = submax(c11_);
  f.a10 = submax(c10_);
  f.a01 = submax(c01_);
  f.a00 = submax(c00_);
  f.runs.reserve(run_grids_.size());
  for (const auto& g : run_grids_) f.runs.push_back(submax(g));
  f.hold = hold_;
  f.depth = solution_.depth;
  return f;
}

double per_opportunity_envelope(const CertifiedFactors& f, double rho_ul,
                                double rho_dl) {
  if (!(rho_ul >= 0.0 && rho_ul <= 1.0 && rho_dl >= 0.0 && rho_dl <= 1.0)) {
    throw std::invalid_argument("per_opportunity_envelope: rho outside [0, 1]");
  }
  const double lo = std::max(0.0, rho_ul + rho_dl - 1.0);
  const double hi = std::min(rho_ul, rho_dl);
  auto mix = [&](double b) {
    return b * f.a11 + (rho_ul - b) * f.a10 + (rho_dl - b) * f.a01 +
           (1.0 - rho_ul - rho_dl + b) * f.a00;
  };
  return std::max(mix(lo), mix(hi));
}

double cycle_envelope(const CertifiedFactors& f, double rho_ul, double rho_dl,
                      int c, int g) {
  if (g < 1) throw std::invalid_argument("cycle_envelope: g must be >= 1");
  if (c < 0 || c >= g) {
    throw std::invalid_argument(
        "cycle_envelope: failure run outside [0, g-1] (certificate violated)");
  }
  return std::max(per_opportunity_envelope(f, rho_ul, rho_dl), f.run(c + 1));
}

}  // namespace certsched
