#include "certsched/certificate.hpp"

#include <cmath>
#include <stdexcept>

namespace certsched {

std::string QosCertificate::validate() const {
  if (!(d_ul >= 0.0) || !std::isfinite(d_ul)) return "d_ul must be finite and >= 0";
  if (!(d_dl >= 0.0) || !std::isfinite(d_dl)) return "d_dl must be finite and >= 0";
  if (!(t_cert > 0.0) || !std::isfinite(t_cert)) return "t_cert must be finite and > 0";
  if (!(rho_ul >= 0.0 && rho_ul <= 1.0)) return "rho_ul must lie in [0, 1]";
  if (!(rho_dl >= 0.0 && rho_dl <= 1.0)) return "rho_dl must lie in [0, 1]";
  return {};
}

bool certificate_dominates(const QosCertificate& a, const QosCertificate& b) {
  return a.d_ul <= b.d_ul && a.d_dl <= b.d_dl && a.t_cert <= b.t_cert &&
         a.rho_ul >= b.rho_ul && a.rho_dl >= b.rho_dl;
}

bool certificate_dominates_strictly(const QosCertificate& a,
                                    const QosCertificate& b) {
  return certificate_dominates(a, b) &&
         (a.d_ul < b.d_ul || a.d_dl < b.d_dl || a.t_cert < b.t_cert ||
          a.rho_ul > b.rho_ul || a.rho_dl > b.rho_dl);
}

bool action_dominates(const QosCertificate& qa, int slots_a,
                      const QosCertificate& qb, int slots_b) {
  if (!certificate_dominates(qa, qb) || slots_a > slots_b) return false;
  return certificate_dominates_strictly(qa, qb) || slots_a < slots_b;
}

int slot_blocks(int n, double b_eff, double t_slot) {
  if (n <= 0) throw std::invalid_argument("slot_blocks: blocklength must be > 0");
  const double payload = std::floor(b_eff * t_slot);
  if (!(payload >= 1.0)) {
    throw std::invalid_argument("slot_blocks: slot carries zero whole symbols");
  }
  return static_cast<int>(std::ceil(static_cast<double>(n) / payload));
}

double opportunity_spacing(int a_ul, int b_ul, int a_dl, int b_dl,
                           double tau_slot) {
  if (a_ul < 0 || a_dl < 0 || b_ul < a_ul || b_dl < a_dl) {
    throw std::invalid_argument("opportunity_spacing: malformed slot window");
  }
  if (!(tau_slot > 0.0)) {
    throw std::invalid_argument("opportunity_spacing: tau_slot must be > 0");
  }
  const int first = std::min(a_ul, a_dl);
  const int last = std::max(b_ul, b_dl);
  return static_cast<double>(last - first + 1) * tau_slot;
}

int ceil_cycles(double x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("ceil_cycles: step must be > 0");
  const double r = x / t;
  const double snapped = std::nearbyint(r);
  if (std::abs(r - snapped) <= 1e-9 * std::max(1.0, std::abs(r))) {
    return static_cast<int>(snapped);
  }
  return static_cast<int>(std::ceil(r));
}

TimingTriple timing_triple(const QosCertificate& q, double t_s) {
  if (!(t_s > 0.0)) throw std::invalid_argument("timing_triple: t_s must be > 0");
  const std::string reason = q.validate();
  if (!reason.empty()) throw std::invalid_argument("timing_triple: " + reason);

  const double ratio = q.t_cert / t_s;
  const double snapped = std::nearbyint(ratio);
  if (!(snapped >= 1.0) ||
      std::abs(ratio - snapped) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw std::invalid_argument(
        "timing_triple: t_cert must be a positive whole multiple of t_s");
  }
  return TimingTriple{ceil_cycles(q.d_ul, t_s), ceil_cycles(q.d_dl, t_s),
                      static_cast<int>(snapped)};
}

}  // namespace certsched
