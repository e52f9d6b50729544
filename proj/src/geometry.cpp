#include "certsched/geometry.hpp"

#include <algorithm>

namespace certsched {

bool segment_blocked(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Box& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Eigen::Vector3d d = b - a;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (a[axis] < box.lo[axis] || a[axis] > box.hi[axis]) return false;
      continue;
    }
    double near = (box.lo[axis] - a[axis]) / d[axis];
    double far = (box.hi[axis] - a[axis]) / d[axis];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace certsched
