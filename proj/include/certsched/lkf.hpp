#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace certsched {

// Outcome of one bidirectional service opportunity.
enum class LinkOutcome { kBidirectional, kUplinkOnly, kDownlinkOnly, kNone };

// The lifted error state stacks the current 3-d tracking error and H delayed
// copies; all transition matrices below act on that 3*(H+1) vector.  The top
// block row carries A = I plus feedback authority -B*K distributed over
// delay columns, the rows below are the delay-line shift.
//
// Column placement encodes information freshness.  On bidirectional success
// a (1-theta) share of the feedback acts at column 0 (the forward-propagated
// estimate) and theta/2 shares act at the uplink and downlink delay columns.
// A failed direction shifts the shares it gates one column staler (capped at
// the buffer depth): a downlink failure stales the applied command, an
// uplink failure stales the estimate the command was built on.  When both
// directions fail the matrix equals the first failure-run matrix: the whole
// authority sits at the once-shifted delay indices.
Eigen::MatrixXd build_lifted_matrix(LinkOutcome outcome, int h_ul, int h_dl,
                                    int depth, const Eigen::Matrix3d& bk,
                                    double theta = 0.5);

// Transition matrix for the j-th consecutive cycle of an all-failure run:
// no fresh share, half-weights at the staled columns min(h_ul + j, depth) and
// min(h_dl + j, depth).  Saturates once both columns reach the buffer depth;
// j = 1 equals the both-directions-failed matrix bit for bit.
Eigen::MatrixXd build_run_matrix(int j, int h_ul, int h_dl, int depth,
                                 const Eigen::Matrix3d& bk);

// Growth factor of one transition under the quadratic form x: the largest
// generalized eigenvalue of (M' X M, X), i.e. the worst-case one-step ratio
// V(Mz)/V(z).
double mode_factor_raw(const Eigen::MatrixXd& m, const Eigen::MatrixXd& x);

struct LkfOptions {
  double epsilon = 1e-4;     // uniform definiteness / decrease margin
  double theta = 0.5;        // fresh-share weight in the lifted matrices
  int max_iterations = 6000; // subgradient budget before declaring infeasible
  bool reduce_trace = true;  // best-effort shrink toward the epsilon floor
};

struct LkfSolution {
  Eigen::MatrixXd x;      // common quadratic form, positive definite
  double epsilon = 0.0;
  double theta = 0.5;
  int h_ul_max = 0;       // constrained delay grid [0..h_ul_max] x [0..h_dl_max]
  int h_dl_max = 0;
  int depth = 0;          // buffer depth H = max(h_ul_max, h_dl_max)
  Eigen::Matrix3d bk;     // feedback authority B*K the grid was solved for
  double max_residual = 0.0;  // max over grid of lambda_max(M'XM - X + eps I)
  int iterations = 0;
};

// Find one x >= eps*I with M' x M - x <= -eps*I for every bidirectional-
// success matrix on the delay grid.  Projected subgradient on the worst
// constraint residual, warm-started from the discrete Lyapunov solution of
// the slowest grid mode; a strictly feasible iterate is rescaled (the
// constraint family is homogeneous in x) to meet the margins exactly and
// then normalized so lambda_min(x) >= 1.  Returns nothing when some grid
// mode is not Schur or the budget runs out without a feasible iterate.
std::optional<LkfSolution> solve_lkf(const Eigen::Matrix3d& bk, int h_ul_max,
                                     int h_dl_max,
                                     const LkfOptions& opts = {});

// Certified contraction/growth factors for one certificate timing (h_ul,
// h_dl), all evaluated under the solution's common quadratic form.
struct CertifiedFactors {
  double a11 = 0.0;  // bidirectional success
  double a10 = 0.0;  // uplink only
  double a01 = 0.0;  // downlink only
  double a00 = 0.0;  // both failed
  std::vector<double> runs;  // runs[j-1] = j-th run-cycle factor, j = 1..depth
  double hold = 1.0;         // saturated zero-allocation growth, >= 1
  int depth = 0;

  // Run factor with saturation: j >= depth reuses the depth value.
  double run(int j) const;
};

// Factor tables over the full solution grid with per-certificate lookup.
// Degradation closure: the certified factor of an outcome maxes the raw
// factors of every outcome with at least as much information (11 above 10
// and 01, all above 00), so the ordering a11 <= a10 <= a00 and
// a11 <= a01 <= a00 holds exactly for any positive definite x.  Lookups over
// a smaller delay sub-grid maximize over fewer points, so enlarging
// (h_ul, h_dl) never decreases any factor.
class EnvelopeTable {
 public:
  explicit EnvelopeTable(LkfSolution solution);

  const LkfSolution& solution() const { return solution_; }

  // h_ul, h_dl must lie within the solved grid.
  CertifiedFactors factors(int h_ul, int h_dl) const;

  double hold_factor() const { return hold_; }

 private:
  using Grid = std::vector<std::vector<double>>;

  LkfSolution solution_;
  Grid c11_, c10_, c01_, c00_;      // closure grids, indexed [h_ul][h_dl]
  std::vector<Grid> run_grids_;     // [j-1][h_ul][h_dl], j = 1..depth
  double hold_ = 1.0;
};

// Worst per-opportunity envelope over joint success probabilities consistent
// with the per-direction reliabilities: the linear mixture E(b) is maximized
// at an endpoint of the Frechet interval
// b in [max(0, rho_ul + rho_dl - 1), min(rho_ul, rho_dl)].
double per_opportunity_envelope(const CertifiedFactors& f, double rho_ul,
                                double rho_dl);

// Certified cycle envelope given the current bidirectional failure run c
// under a certificate with interaction budget g: the worse of the
// per-opportunity envelope and the (c+1)-th run factor.  Throws
// std::invalid_argument when c >= g (the certificate is already violated)
// or c < 0.
double cycle_envelope(const CertifiedFactors& f, double rho_ul, double rho_dl,
                      int c, int g);

}  // namespace certsched
