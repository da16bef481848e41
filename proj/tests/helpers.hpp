#ifndef REFRAME_TESTS_HELPERS_HPP
#define REFRAME_TESTS_HELPERS_HPP

#include <cstdint>

#include "doctest.h"
#include "reframe/common.hpp"
#include "reframe/geometry.hpp"
#include "reframe/rng.hpp"
#include "reframe/video.hpp"

namespace reframe::test {

inline Eigen::Vector3d random_vector(SplitMix64& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

inline Posed random_pose(SplitMix64& rng, double max_angle = 3.0, double max_shift = 2.0) {
  const Eigen::Vector3d axis = random_vector(rng) + Eigen::Vector3d(1e-3, 0, 0);
  return Posed(axis_angle<double>(axis, rng.uniform(-max_angle, max_angle)), random_vector(rng, max_shift));
}

inline LatentVideo random_latent(const VideoShape& shape, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LatentVideo z(shape);
  for (Eigen::Index i = 0; i < z.array().size(); ++i) z.array()[i] = rng.uniform(-1.0, 1.0);
  return z;
}

inline double max_abs_diff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  return (a - b).abs().maxCoeff();
}

/// Runs fn and checks that it throws reframe::Error with the given code.
template <typename Fn>
void check_errc(Fn&& fn, Errc expected) {
  bool thrown = false;
  try {
    fn();
  } catch (const Error& e) {
    thrown = true;
    CHECK(e.code() == expected);
  }
  CHECK(thrown);
}

}  // namespace reframe::test

#endif  // REFRAME_TESTS_HELPERS_HPP
