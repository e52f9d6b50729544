#include <Eigen/Eigenvalues>
#include <random>
#include <stdexcept>

#include "certsched/lkf.hpp"
#include "certsched/plant.hpp"
#include "doctest.h"

using namespace certsched;

namespace {

Eigen::Matrix3d desk_bk() {
  const double t_s = 0.25;
  return t_s * lqr_gain(t_s, 1.0, 0.1) * Eigen::Matrix3d::Identity();
}

// Independent residual of the decrease constraint, fresh eigensolver.
double grid_residual(const LkfSolution& sol) {
  double worst = -1e300;
  for (int hu = 0; hu <= sol.h_ul_max; ++hu) {
    for (int hd = 0; hd <= sol.h_dl_max; ++hd) {
      const Eigen::MatrixXd m = build_lifted_matrix(
          LinkOutcome::kBidirectional, hu, hd, sol.depth, sol.bk, sol.theta);
      Eigen::MatrixXd lhs = m.transpose() * sol.x * m - sol.x +
                            sol.epsilon * Eigen::MatrixXd::Identity(
                                              sol.x.rows(), sol.x.cols());
      lhs = 0.5 * (lhs + lhs.transpose()).eval();
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lhs);
      worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("lifted matrix: shift skeleton and merged depth-0 feedback") {
  const Eigen::Matrix3d bk = 0.4 * Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd m0 =
      build_lifted_matrix(LinkOutcome::kBidirectional, 0, 0, 0, bk);
  CHECK(m0.rows() == 3);
  CHECK((m0 - (Eigen::Matrix3d::Identity() - bk)).norm() == 0.0);

  const Eigen::MatrixXd m =
      build_lifted_matrix(LinkOutcome::kBidirectional, 1, 2, 2, bk, 0.5);
  REQUIRE(m.rows() == 9);
  CHECK((m.block(3, 0, 3, 3) - Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK((m.block(6, 3, 3, 3) - Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK(m.block(3, 3, 3, 6).norm() == 0.0);
  CHECK(m.block(6, 0, 3, 3).norm() == 0.0);
  CHECK(m.block(6, 6, 3, 3).norm() == 0.0);
  // Fresh share at column 0, theta/2 at the uplink and downlink columns.
  CHECK((m.block(0, 0, 3, 3) - (Eigen::Matrix3d::Identity() - 0.5 * bk)).norm() == 0.0);
  CHECK((m.block(0, 3, 3, 3) + 0.25 * bk).norm() == 0.0);
  CHECK((m.block(0, 6, 3, 3) + 0.25 * bk).norm() == 0.0);
}

TEST_CASE("lifted matrix: every outcome distributes the full authority") {
  const Eigen::Matrix3d bk = 0.37 * Eigen::Matrix3d::Identity();
  for (const LinkOutcome out :
       {LinkOutcome::kBidirectional, LinkOutcome::kUplinkOnly,
        LinkOutcome::kDownlinkOnly, LinkOutcome::kNone}) {
    const Eigen::MatrixXd m = build_lifted_matrix(out, 1, 0, 2, bk, 0.5);
    Eigen::Matrix3d total = Eigen::Matrix3d::Zero();
    for (int c = 0; c <= 2; ++c) total += m.block(0, 3 * c, 3, 3);
    // Row sum = A - BK regardless of where the shares sit.
    CHECK((total - (Eigen::Matrix3d::Identity() - bk)).norm() ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("both-failed matrix equals the first run matrix bit for bit") {
  const Eigen::Matrix3d bk = 0.4 * Eigen::Matrix3d::Identity();
  for (const double theta : {0.0, 0.3, 0.5, 1.0}) {
    for (int hu = 0; hu <= 2; ++hu) {
      for (int hd = 0; hd <= 2; ++hd) {
        const Eigen::MatrixXd none =
            build_lifted_matrix(LinkOutcome::kNone, hu, hd, 2, bk, theta);
        const Eigen::MatrixXd run1 = build_run_matrix(1, hu, hd, 2, bk);
        CHECK((none - run1).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("run matrices saturate at the buffer depth") {
  const Eigen::Matrix3d bk = 0.4 * Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd at_depth = build_run_matrix(3, 1, 2, 3, bk);
  for (int j = 4; j <= 8; ++j) {
    CHECK((build_run_matrix(j, 1, 2, 3, bk) - at_depth).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lifted matrix argument validation") {
  const Eigen::Matrix3d bk = Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(build_lifted_matrix(LinkOutcome::kBidirectional, 3, 0, 2, bk),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_lifted_matrix(LinkOutcome::kBidirectional, 0, 0, 2, bk, 1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_run_matrix(0, 0, 0, 2, bk), std::invalid_argument);
}

TEST_CASE("mode factor: pure delay-line shift doubles the identity form") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(6, 6);
  m.block(0, 0, 3, 3) = Eigen::Matrix3d::Identity();
  m.block(3, 0, 3, 3) = Eigen::Matrix3d::Identity();
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(6, 6);
  CHECK(mode_factor_raw(m, x) == doctest::Approx(2.0).epsilon(1e-12));
  // Homogeneous in x.
  CHECK(mode_factor_raw(m, 2.0 * x) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(mode_factor_raw(m, Eigen::MatrixXd::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("lkf solve: certificate is feasible with verified margins") {
  const auto sol = solve_lkf(desk_bk(), 2, 2);
  REQUIRE(sol.has_value());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol->x);
  CHECK(es.eigenvalues().minCoeff() >= sol->epsilon - 1e-10);
  CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-10);  // unit normalization
  CHECK(grid_residual(*sol) <= 1e-8);
  CHECK(sol->depth == 2);
}

TEST_CASE("lkf solve: integrator without feedback has no certificate") {
  CHECK_FALSE(solve_lkf(Eigen::Matrix3d::Zero(), 1, 1).has_value());
}

TEST_CASE("envelope table: outcome-lattice orderings and run saturation") {
  const auto sol = solve_lkf(desk_bk(), 2, 2);
  REQUIRE(sol.has_value());
  const EnvelopeTable table(*sol);
  CHECK(table.hold_factor() >= 1.0);
  for (int hu = 0; hu <= 2; ++hu) {
    for (int hd = 0; hd <= 2; ++hd) {
      const CertifiedFactors f = table.factors(hu, hd);
      CHECK(f.a11 <= f.a10 + 1e-12);
      CHECK(f.a11 <= f.a01 + 1e-12);
      CHECK(f.a10 <= f.a00 + 1e-12);
      CHECK(f.a01 <= f.a00 + 1e-12);
      CHECK(f.a11 < 1.0);  // service must certify contraction on this plant
      REQUIRE(f.depth == 2);
      for (int j = f.depth; j <= f.depth + 4; ++j) {
        CHECK(f.run(j) == f.run(f.depth));  // bit-exact saturation
      }
      CHECK(f.hold == table.hold_factor());
    }
  }
  // Enlarging the certificate timing never shrinks a certified factor.
  const CertifiedFactors small = table.factors(0, 0);
  const CertifiedFactors large = table.factors(2, 2);
  CHECK(small.a11 <= large.a11 + 1e-15);
  CHECK(small.a00 <= large.a00 + 1e-15);
}

TEST_CASE("envelope table: random stabilizing diagonal gains keep the orderings") {
  std::mt19937 gen(424242);
  std::uniform_real_distribution<double> authority(0.05, 1.95);
  int solved = 0;
  while (solved < 10) {
    Eigen::Matrix3d bk = Eigen::Matrix3d::Zero();
    for (int d = 0; d < 3; ++d) bk(d, d) = authority(gen);
    const auto sol = solve_lkf(bk, 2, 2);
    if (!sol.has_value()) continue;
    ++solved;
    const EnvelopeTable table(*sol);
    for (int hu = 0; hu <= 2; ++hu) {
      for (int hd = 0; hd <= 2; ++hd) {
        const CertifiedFactors f = table.factors(hu, hd);
        CHECK(f.a11 <= f.a10 + 1e-12);
        CHECK(f.a11 <= f.a01 + 1e-12);
        CHECK(f.a10 <= f.a00 + 1e-12);
        CHECK(f.a01 <= f.a00 + 1e-12);
      }
    }
  }
}

TEST_CASE("per-opportunity envelope maximizes over the joint-probability interval") {
  CertifiedFactors f;
  f.a11 = 0.8;
  f.a10 = 1.0;
  f.a01 = 1.2;
  f.a00 = 1.3;
  f.runs = {1.3};
  f.hold = 1.5;
  f.depth = 1;
  // Mixture coefficient of the joint-success mass is 0.8-1.0-1.2+1.3 < 0,
  // so the worst case sits at the lower Frechet endpoint b = 0.7.
  CHECK(per_opportunity_envelope(f, 0.9, 0.8) == doctest::Approx(0.88).epsilon(1e-12));
  // Flip the coefficient sign: the upper endpoint b = 0.8 must win instead.
  CertifiedFactors f2 = f;
  f2.a11 = 0.7;
  f2.a00 = 1.6;
  CHECK(per_opportunity_envelope(f2, 0.9, 0.8) == doctest::Approx(0.82).epsilon(1e-12));
  // The envelope dominates the mixture at every feasible joint mass.
  for (double b = 0.7; b <= 0.8 + 1e-12; b += 0.01) {
    const double mix = b * f.a11 + (0.9 - b) * f.a10 + (0.8 - b) * f.a01 +
                       (1.0 - 0.9 - 0.8 + b) * f.a00;
    CHECK(per_opportunity_envelope(f, 0.9, 0.8) >= mix - 1e-12);
  }
}

TEST_CASE("cycle envelope takes the worse of mixture and pending run factor") {
  CertifiedFactors f;
  f.a11 = 0.8;
  f.a10 = 1.0;
  f.a01 = 1.2;
  f.a00 = 1.3;
  f.runs = {1.3};
  f.hold = 1.5;
  f.depth = 1;
  // One failure already pending: the second run-cycle factor (saturated at
  // depth 1) overrides the 0.88 mixture.
  CHECK(cycle_envelope(f, 0.9, 0.8, 1, 3) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(cycle_envelope(f, 0.9, 0.8, 0, 3) >= per_opportunity_envelope(f, 0.9, 0.8));
  CHECK_THROWS_AS(cycle_envelope(f, 0.9, 0.8, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(cycle_envelope(f, 0.9, 0.8, -1, 3), std::invalid_argument);
}
