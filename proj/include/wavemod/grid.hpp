#pragma once

namespace wavemod {

// Uniform 1-D grid x_i = x0 + i*dx, i = 0..N-1.
struct Grid {
  double x0 = 0.0;
  double dx = 0.0;
  int N = 0;

  double point(int i) const { return x0 + i * dx; }
  double length() const { return dx * N; }
  // [-L/2, L/2) with N points (periodic convention: right endpoint excluded)
  static Grid centered(double L, int N) { return {-L / 2.0, L / N, N}; }
};

} // namespace wavemod
