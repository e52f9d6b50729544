#pragma once

#include <string>

namespace certsched {

/// Quality-of-service contract attached to one scheduled service opportunity.
/// Coordinates: worst-case one-way delays (s) for uplink and downlink, a
/// maximum certified interval between successful bidirectional interactions
/// (s), and lower bounds on per-direction service reliability.
struct QosCertificate {
  double d_ul = 0.0;    ///< uplink deadline, seconds, >= 0
  double d_dl = 0.0;    ///< downlink deadline, seconds, >= 0
  double t_cert = 0.0;  ///< certified max interaction interval, seconds, > 0
  double rho_ul = 0.0;  ///< uplink service reliability lower bound in [0, 1]
  double rho_dl = 0.0;  ///< downlink service reliability lower bound in [0, 1]

  /// Empty string when the coordinates form a valid certificate, otherwise a
  /// human-readable reason (used when certificates are read back from files).
  std::string validate() const;
};

/// Discrete timing image of a certificate: deadlines in whole control cycles
/// and the interaction budget in opportunities.
struct TimingTriple {
  int h_ul = 0;  ///< ceil(d_ul / t_s)
  int h_dl = 0;  ///< ceil(d_dl / t_s)
  int g = 0;     ///< t_cert / t_s, exact by contract
};

/// Partial order on certificates: a is at least as strong as b when every
/// deadline and the interaction interval are no longer and every reliability
/// is no smaller.  Reflexive; not total.
bool certificate_dominates(const QosCertificate& a, const QosCertificate& b);

/// Strict version: dominates and differs in at least one coordinate.
bool certificate_dominates_strictly(const QosCertificate& a,
                                    const QosCertificate& b);

/// Action-level dominance: certificate dominance plus no-higher slot cost,
/// strict in at least one of the six comparisons.  Used for frontier pruning;
/// the full scheduled-action type forwards here.
bool action_dominates(const QosCertificate& qa, int slots_a,
                      const QosCertificate& qb, int slots_b);

/// Number of whole slots occupied by one coded block of n symbols given the
/// effective symbol rate (symbols/s) and the slot payload duration (s).
/// Throws std::invalid_argument when n <= 0 or when a slot carries zero
/// whole symbols.
int slot_blocks(int n, double b_eff, double t_slot);

/// Slot-clock spacing of one bidirectional opportunity whose uplink window is
/// [a_ul, b_ul] and downlink window [a_dl, b_dl] (inclusive slot indices):
/// (max(b_ul, b_dl) - min(a_ul, a_dl) + 1) * tau_slot.
/// Throws std::invalid_argument on an empty window (a > b) or negative index.
double opportunity_spacing(int a_ul, int b_ul, int a_dl, int b_dl,
                           double tau_slot);

/// Map a certificate's continuous coordinates onto the cycle clock t_s.
/// t_cert must be an integer multiple of t_s within 1e-9 relative tolerance;
/// otherwise throws std::invalid_argument.  Monotone: a dominating
/// certificate never gets a larger h_ul, h_dl or g.
TimingTriple timing_triple(const QosCertificate& q, double t_s);

/// ceil(x / t) with a 1e-9 relative snap so that exact multiples do not round
/// up through floating noise.  t must be > 0.
int ceil_cycles(double x, double t);

}  // namespace certsched
