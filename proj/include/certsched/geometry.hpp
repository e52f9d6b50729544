#pragma once

#include <Eigen/Dense>

namespace certsched {

// Axis-aligned obstruction (the inspected building).
struct Box {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

// True when the open segment between a and b passes through the box
// (touching a face exactly counts as blocked).  Standard slab test.
bool segment_blocked(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Box& box);

struct WorldGeometry {
  Box building;
  Eigen::Vector3d gcs;
};

}  // namespace certsched
