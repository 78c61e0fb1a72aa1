#pragma once

#include <chrono>
#include <cstdint>

#include "tendon/core/rng.hpp"
#include "tendon/dynamics/limb.hpp"

namespace tendon::harness {

struct BenchResult {
  long long substeps = 0;
  double seconds = 0.0;
  double substeps_per_second = 0.0;
  double checksum = 0.0;  // keeps the loop observable
};

/// Times the fixed-base limb on one thread: `sim_seconds` of simulated time
/// in 100 Hz ticks, with a new random activation every 0.1 s.
inline BenchResult bench_limb(const LimbParams& limb, double sim_seconds, std::uint64_t seed) {
  Rng rng(seed);
  const double dt = 0.01;
  const long long ticks = static_cast<long long>(sim_seconds / dt);
  LimbState s;
  ActivationSample a;
  StepReport report;
  const auto t0 = std::chrono::steady_clock::now();
  for (long long i = 0; i < ticks; ++i) {
    if (i % 10 == 0)
      for (int m = 0; m < 3; ++m) a.a[m] = rng.uniform();
    s = step(s, a, dt, limb, &report);
  }
  BenchResult r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.substeps = report.substeps;
  r.substeps_per_second = static_cast<double>(r.substeps) / r.seconds;
  r.checksum = s.q.sum() + s.qd.sum();
  return r;
}

}  // namespace tendon::harness
