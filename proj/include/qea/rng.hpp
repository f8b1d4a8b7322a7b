#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>

// Deterministic RNG with explicit bit mappings.  std::uniform_real_distribution
// and friends are implementation-defined, which would break byte-identical
// reproducibility of outputs; SplitMix64 plus explicit conversions is stable
// across platforms.

namespace qea {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard gaussian via Box-Muller
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::complex<double> cgaussian() {
    const double re = gaussian();
    const double im = gaussian();
    return {re, im};
  }

  // Haar-distributed unitary: QR of a complex Ginibre matrix with the phase
  // convention diag(R) > 0.
  Eigen::MatrixXcd unitary(int n) {
    Eigen::MatrixXcd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = cgaussian();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd Q = qr.householderQ();
    Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
      std::complex<double> d = R(j, j);
      const double a = std::abs(d);
      std::complex<double> ph = a > 0 ? d / a : std::complex<double>(1, 0);
      Q.col(j) *= ph;
    }
    return Q;
  }

  Eigen::MatrixXcd hermitian(int n) {
    Eigen::MatrixXcd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = cgaussian();
    return 0.5 * (g + g.adjoint());
  }

 private:
  std::uint64_t state_;
};

}  // namespace qea
