#include <stdexcept>

#include "certsched/channel.hpp"
#include "certsched/frame.hpp"
#include "certsched/geometry.hpp"
#include "doctest.h"

using namespace certsched;

namespace {

Box far_box() {
  Box b;
  b.lo = Eigen::Vector3d(1000.0, 1000.0, 0.0);
  b.hi = Eigen::Vector3d(1010.0, 1010.0, 10.0);
  return b;
}

Box desk_box() {
  Box b;
  b.lo = Eigen::Vector3d(-30.0, -30.0, 0.0);
  b.hi = Eigen::Vector3d(30.0, 30.0, 24.0);
  return b;
}

// One-hop uplink plus one-hop downlink between UAV node 1 and GCS node 0.
ScheduledAction direct_action(int attempts = 1) {
  ScheduledAction a;
  a.loop = 0;
  a.route_ul = {1, 0};
  a.route_dl = {0, 1};
  a.retx = attempts - 1;
  a.blocklength = 200;
  HopReservation ul;
  ul.tx_node = 1;
  ul.rx_node = 0;
  ul.uplink = true;
  ul.first_slot = 0;
  ul.slots_per_attempt = 1;
  ul.attempts = attempts;
  ul.blocklength = 200;
  HopReservation dl = ul;
  dl.tx_node = 0;
  dl.rx_node = 1;
  dl.uplink = false;
  dl.first_slot = attempts;
  a.hops = {ul, dl};
  a.slot_cost = 2 * attempts;
  a.span_ul = attempts;
  a.span_dl = attempts;
  return a;
}

}  // namespace

TEST_CASE("link budget pieces") {
  ChannelParams ch;
  CHECK(noise_floor_dbm(ch) == doctest::Approx(-174.0 + 10.0 * std::log10(5e6) + 7.0));
  CHECK(link_snr_db(20.0, 80.0, -2.0, -100.0) == doctest::Approx(38.0));

  // LOS vs through-building loss.
  const Box box = desk_box();
  const Eigen::Vector3d east(50.0, 0.0, 10.0), west(-50.0, 0.0, 10.0);
  const Eigen::Vector3d above_e(50.0, 0.0, 80.0), above_w(-50.0, 0.0, 80.0);
  CHECK(segment_blocked(east, west, box));
  CHECK_FALSE(segment_blocked(above_e, above_w, box));
  const double d = 100.0;
  CHECK(path_loss_db(above_e, above_w, box, ch) ==
        doctest::Approx(ch.pl_ref_db + 10.0 * ch.exp_los * std::log10(d)));
  CHECK(path_loss_db(east, west, box, ch) ==
        doctest::Approx(ch.pl_ref_db + 10.0 * ch.exp_nlos * std::log10(d) +
                        ch.penetration_db));
  // Sub-meter separations clamp at the reference distance.
  CHECK(path_loss_db(east, east + Eigen::Vector3d(0.1, 0, 0), box, ch) ==
        doctest::Approx(ch.pl_ref_db));
}

TEST_CASE("decode threshold anchors at the 200-symbol reference") {
  ChannelParams ch;
  ch.thr_base_db = 8.0;
  CHECK(snr_threshold_db(200, ch) == doctest::Approx(8.0));
  CHECK(snr_threshold_db(500, ch) ==
        doctest::Approx(8.0 + 10.0 * std::log10(2.5)));
  CHECK(snr_threshold_db(100, ch) < 8.0);
  CHECK_THROWS_AS(snr_threshold_db(0, ch), std::invalid_argument);
}

TEST_CASE("shadowing is symmetric in the node pair and fixed per trial") {
  ChannelParams ch;
  const CounterRng rng(11);
  CHECK(shadowing_db(ch, rng, 3, 1, 4) == shadowing_db(ch, rng, 3, 4, 1));
  CHECK(shadowing_db(ch, rng, 3, 1, 4) != shadowing_db(ch, rng, 4, 1, 4));
}

TEST_CASE("class keys bucket bottleneck SNR in 3 dB bins with clamping") {
  CHECK(ClassKey::bucket_of_snr(-9.0) == 0);
  CHECK(ClassKey::bucket_of_snr(-20.0) == 0);
  CHECK(ClassKey::bucket_of_snr(-6.1) == 0);
  CHECK(ClassKey::bucket_of_snr(-6.0) == 1);
  CHECK(ClassKey::bucket_of_snr(0.0) == 3);
  CHECK(ClassKey::bucket_of_snr(14.0) == 7);
  CHECK(ClassKey::bucket_of_snr(100.0) == 14);

  ClassKey key;
  key.hops = 2;
  key.snr_bucket = 4;
  key.retx = 1;
  key.block_idx = 0;
  CHECK(key.str() == "h2.s4.r1.b0");
  CHECK(ClassKey::parse("h2.s4.r1.b0") == key);
  CHECK_THROWS_AS(ClassKey::parse("nonsense"), std::invalid_argument);
}

TEST_CASE("frame packing concatenates blocks and rejects overflow") {
  ScheduledAction a = direct_action(1);  // 2 slots
  ScheduledAction b = direct_action(2);  // 4 slots
  const PackedFrame frame = pack_frame({a, b}, 10);
  REQUIRE(frame.assignments.size() == 2);
  CHECK(frame.assignments[0].base_slot == 0);
  CHECK(frame.assignments[1].base_slot == 2);
  CHECK(frame.slots_used == 6);
  CHECK(frame.frame_slots == 10);
  CHECK_THROWS_AS(pack_frame({a, b, b}, 9), std::invalid_argument);
}

TEST_CASE("cycle execution is deterministic and respects the link budget") {
  ChannelParams ch;
  ch.shadow_sigma_db = 0.0;
  ch.thr_base_db = -30.0;  // ~41 dB of headroom: both directions decode
  const Box box = far_box();
  const std::vector<Eigen::Vector3d> nodes = {Eigen::Vector3d(0.0, 0.0, 2.0),
                                              Eigen::Vector3d(40.0, 0.0, 50.0)};
  const CounterRng rng(5);
  const std::vector<ScheduledAction> actions = {direct_action(1)};
  const PackedFrame frame = pack_frame(actions, 40);

  const auto out1 =
      execute_cycle(actions, frame, nodes, box, ch, 550e-6, rng, 5, 3);
  const auto out2 =
      execute_cycle(actions, frame, nodes, box, ch, 550e-6, rng, 5, 3);
  REQUIRE(out1.size() == 1);
  CHECK(out1[0].loop == 0);
  CHECK(out1[0].ul.attempted);
  CHECK(out1[0].dl.attempted);
  CHECK(out1[0].ul.success);
  CHECK(out1[0].dl.success);
  CHECK(out1[0].bidirectional());
  CHECK(out1[0].ul.delay_s > 0.0);
  CHECK(out1[0].ul.success == out2[0].ul.success);
  CHECK(out1[0].ul.realized_snr_db == out2[0].ul.realized_snr_db);
  CHECK(out1[0].ul.delay_s == out2[0].ul.delay_s);

  // The logged realized SNR is the large-scale link budget, no fading term.
  CHECK(out1[0].ul.realized_snr_db ==
        doctest::Approx(realized_link_snr_db(nodes[1], nodes[0], box, ch, rng, 5, 1, 0)));

  // Starve the link and both directions must fail.
  ChannelParams dead = ch;
  dead.p_tx_dbm = -120.0;
  dead.thr_base_db = 5.0;
  const auto out3 =
      execute_cycle(actions, frame, nodes, box, dead, 550e-6, rng, 5, 3);
  CHECK_FALSE(out3[0].ul.success);
  CHECK_FALSE(out3[0].dl.success);
}

TEST_CASE("burst entry classifies grazing and long-range rays as risky") {
  ChannelParams ch;
  ch.burst_p_enter = 0.01;
  ch.burst_p_enter_risk = 0.07;
  ch.burst_clear_m = 25.0;
  ch.burst_range_m = 130.0;
  const Box box = desk_box();
  // High overhead ray, short: well-conditioned.
  CHECK(burst_enter_prob(Eigen::Vector3d(40, 0, 90), Eigen::Vector3d(-40, 0, 90),
                         box, ch) == doctest::Approx(0.01));
  // Same geometry but grazing the roof inside the clearance band.
  CHECK(burst_enter_prob(Eigen::Vector3d(40, 0, 30), Eigen::Vector3d(-40, 0, 30),
                         box, ch) == doctest::Approx(0.07));
  // Clear of the structure but stretched past the range knee.
  CHECK(burst_enter_prob(Eigen::Vector3d(80, 0, 90), Eigen::Vector3d(-80, 0, 90),
                         box, ch) == doctest::Approx(0.07));
}

TEST_CASE("burst field: deterministic, symmetric, and policy independent") {
  ChannelParams ch;
  ch.burst_p_stay = 0.9;
  ch.burst_p_enter = 0.999;  // near-certain entry for the test
  ch.burst_p_enter_risk = 0.999;
  const Box box = far_box();
  const CounterRng rng(21);
  std::vector<Eigen::Vector3d> refs = {Eigen::Vector3d(0, 0, 2),
                                       Eigen::Vector3d(50, 0, 80),
                                       Eigen::Vector3d(-50, 0, 80)};

  BurstField f1, f2;
  f1.reset(3);
  f2.reset(3);
  for (int k = 0; k < 5; ++k) {
    f1.step(refs, box, ch, rng, 9, k);
    f2.step(refs, box, ch, rng, 9, k);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        CHECK(f1.bad(a, b) == f2.bad(a, b));
        CHECK(f1.bad(a, b) == f1.bad(b, a));
      }
    }
  }
  // With entry probability ~1 every link is bad after one step.
  CHECK(f1.bad(0, 1));
  CHECK(f1.bad(0, 2));
  CHECK(f1.bad(1, 2));

  // Zero entry keeps the field clean.
  ChannelParams calm = ch;
  calm.burst_p_enter = 0.0;
  calm.burst_p_enter_risk = 0.0;
  BurstField quiet;
  quiet.reset(3);
  quiet.step(refs, box, calm, rng, 9, 0);
  CHECK_FALSE(quiet.bad(0, 1));

  BurstField wrong;
  wrong.reset(2);
  CHECK_THROWS_AS(wrong.step(refs, box, ch, rng, 9, 0), std::invalid_argument);
}

TEST_CASE("a bad burst state costs exactly the configured fade") {
  ChannelParams ch;
  ch.shadow_sigma_db = 0.0;
  ch.thr_base_db = -30.0;
  ch.burst_fade_db = 18.0;
  ch.burst_p_enter = 0.999;
  ch.burst_p_enter_risk = 0.999;
  const Box box = far_box();
  const std::vector<Eigen::Vector3d> nodes = {Eigen::Vector3d(0.0, 0.0, 2.0),
                                              Eigen::Vector3d(40.0, 0.0, 50.0)};
  const CounterRng rng(5);
  const std::vector<ScheduledAction> actions = {direct_action(1)};
  const PackedFrame frame = pack_frame(actions, 40);

  BurstField field;
  field.reset(2);
  field.step(nodes, box, ch, rng, 5, 0);
  REQUIRE(field.bad(0, 1));

  const auto clean =
      execute_cycle(actions, frame, nodes, box, ch, 550e-6, rng, 5, 0, nullptr);
  const auto burst =
      execute_cycle(actions, frame, nodes, box, ch, 550e-6, rng, 5, 0, &field);
  CHECK(burst[0].ul.realized_snr_db ==
        doctest::Approx(clean[0].ul.realized_snr_db - 18.0));
  CHECK(burst[0].dl.realized_snr_db ==
        doctest::Approx(clean[0].dl.realized_snr_db - 18.0));
}
