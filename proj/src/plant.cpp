#include "certsched/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certsched {

double lqr_gain(double t_s, double q_weight, double r_weight) {
  if (!(t_s > 0.0) || !(q_weight > 0.0) || !(r_weight > 0.0)) {
    throw std::invalid_argument("lqr_gain: t_s, q, r must all be > 0");
  }
  // Stationary Riccati value for the scalar chain p = q + p - p^2 t^2/(r + t^2 p)
  // reduces to t^2 p^2 - q t^2 p - q r = 0.
  const double t2 = t_s * t_s;
  const double p =
      (q_weight * t2 + std::sqrt(q_weight * q_weight * t2 * t2 +
                                 4.0 * q_weight * r_weight * t2)) /
      (2.0 * t2);
  return t_s * p / (r_weight + t2 * p);
}

Eigen::Vector3d lqr_command(const Eigen::Vector3d& estimate,
                            const Eigen::Vector3d& reference, double gain) {
  return -gain * (estimate - reference);
}

double covariance_step(double sigma, bool uplink_success, int h_ul,
                       double tr_meas, double tr_proc) {
  if (!(sigma >= 0.0) || !(tr_meas >= 0.0) || !(tr_proc >= 0.0) || h_ul < 0) {
    throw std::invalid_argument("covariance_step: negative argument");
  }
  return uplink_success ? refresh_floor(h_ul, tr_meas, tr_proc)
                        : sigma + tr_proc;
}

LoopState hold_map(const LoopState& zeta, double alpha_hold, double tr_proc) {
  if (!(alpha_hold >= 1.0)) {
    throw std::invalid_argument("hold_map: alpha_hold must be >= 1");
  }
  LoopState next = zeta;
  next.z = std::sqrt(alpha_hold) * zeta.z;
  next.v = alpha_hold * zeta.v;
  next.sigma_trace = zeta.sigma_trace + tr_proc;
  next.failure_run = zeta.failure_run + 1;
  return next;
}

bool hold_admissible(const LoopState& zeta, const AdmissibleDomain& domain,
                     double alpha_hold, double tr_proc) {
  return domain.contains(alpha_hold * zeta.v, zeta.sigma_trace + tr_proc);
}

std::pair<LoopState, double> safe_mode_step(const LoopState& zeta,
                                            const AdmissibleDomain& domain,
                                            const SafeModeParams& params,
                                            double tr_proc,
                                            double lambda_sigma, bool sync) {
  if (!(params.contraction > 0.0 && params.contraction <= 1.0)) {
    throw std::invalid_argument("safe_mode_step: contraction must be in (0, 1]");
  }
  LoopState next = zeta;
  const double v_next = std::max(params.v_floor, params.contraction * zeta.v);
  if (zeta.v > 0.0) {
    next.z = std::sqrt(v_next / zeta.v) * zeta.z;
  }
  next.v = v_next;
  next.sigma_trace = std::clamp(zeta.sigma_trace + tr_proc, domain.sigma_min,
                                domain.sigma_max);
  next.failure_run = sync ? 0 : zeta.failure_run + 1;
  next.safe_mode = true;
  const double drift =
      augmented_lyapunov(next.v, next.sigma_trace, lambda_sigma) -
      augmented_lyapunov(zeta.v, zeta.sigma_trace, lambda_sigma);
  return {next, drift};
}

double swarm_rmse(const std::vector<Eigen::Vector3d>& positions,
                  const std::vector<Eigen::Vector3d>& references) {
  if (positions.empty() || positions.size() != references.size()) {
    throw std::invalid_argument("swarm_rmse: size mismatch or empty swarm");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    acc += (positions[i] - references[i]).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(positions.size()));
}

Eigen::VectorXd shift_error_buffer(const Eigen::VectorXd& z,
                                   const Eigen::Vector3d& e_new) {
  if (z.size() % 3 != 0 || z.size() < 3) {
    throw std::invalid_argument("shift_error_buffer: buffer must stack 3-vectors");
  }
  Eigen::VectorXd out(z.size());
  out.head<3>() = e_new;
  if (z.size() > 3) out.tail(z.size() - 3) = z.head(z.size() - 3);
  return out;
}

}  // namespace certsched
