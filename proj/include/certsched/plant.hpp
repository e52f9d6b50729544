#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace certsched {

// Per-loop controller-side state: lifted tracking error z (current error on
// top, delayed copies below), its quadratic form v under the certified
// weighting, the tracked estimate-covariance trace, and the current
// bidirectional-failure run length.
struct LoopState {
  Eigen::VectorXd z;
  double v = 0.0;
  double sigma_trace = 0.0;
  int failure_run = 0;
  bool safe_mode = false;
};

struct AdmissibleDomain {
  double v_max = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;

  bool contains(double v, double sigma) const {
    return v >= 0.0 && v <= v_max && sigma >= sigma_min && sigma <= sigma_max;
  }
};

struct SafeModeParams {
  double contraction = 0.95;  // per-cycle factor on v
  double v_floor = 0.0;       // local autonomy cannot certify below this
};

// Scalar LQR gain for the cycle-sampled single integrator (A = I,
// B = t_s * I) with isotropic weights q, r: closed-form stationary Riccati
// solution, K = k * I.
double lqr_gain(double t_s, double q_weight, double r_weight);

// u = -k * (estimate - reference)
Eigen::Vector3d lqr_command(const Eigen::Vector3d& estimate,
                            const Eigen::Vector3d& reference, double gain);

// One cycle of the kinematic plant.
inline Eigen::Vector3d step_plant(const Eigen::Vector3d& p,
                                  const Eigen::Vector3d& u, double t_s,
                                  const Eigen::Vector3d& noise) {
  return p + t_s * u + noise;
}

// Covariance-trace floor right after a successful uplink refresh whose
// sample is h_ul cycles old.
inline double refresh_floor(int h_ul, double tr_meas, double tr_proc) {
  return tr_meas + static_cast<double>(h_ul) * tr_proc;
}

// Trace recursion: reset to the refresh floor on uplink success, otherwise
// open-loop growth by the process-noise trace.
double covariance_step(double sigma, bool uplink_success, int h_ul,
                       double tr_meas, double tr_proc);

inline double augmented_lyapunov(double v, double sigma, double lambda_sigma) {
  return v + lambda_sigma * sigma;
}

// Certified zero-allocation continuation: v grows by the hold factor, the
// covariance trace by the process noise, and the failure run by one.  z is
// scaled along so v stays its quadratic form.
LoopState hold_map(const LoopState& zeta, double alpha_hold, double tr_proc);

// Whether the hold continuation stays inside the admissible domain.
bool hold_admissible(const LoopState& zeta, const AdmissibleDomain& domain,
                     double alpha_hold, double tr_proc);

// Deterministic local-autonomy step: v contracts toward the floor, the
// covariance trace grows but is clamped into the domain, and a successful
// external bidirectional exchange (sync) resets the failure run.  Returns
// the new state and the drift of the augmented function W = v + lambda*sigma.
// The image of an in-domain state is always in-domain.
std::pair<LoopState, double> safe_mode_step(const LoopState& zeta,
                                            const AdmissibleDomain& domain,
                                            const SafeModeParams& params,
                                            double tr_proc,
                                            double lambda_sigma,
                                            bool sync = false);

// Swarm tracking error: ||P - P_ref||_F / sqrt(N).
double swarm_rmse(const std::vector<Eigen::Vector3d>& positions,
                  const std::vector<Eigen::Vector3d>& references);

// Push a fresh error on top of the delay buffer, dropping the oldest copy.
Eigen::VectorXd shift_error_buffer(const Eigen::VectorXd& z,
                                   const Eigen::Vector3d& e_new);

inline double quadratic_form(const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& z) {
  return z.dot(x * z);
}

}  // namespace certsched
