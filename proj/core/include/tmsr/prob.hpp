#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tmsr::prob {

/// t1 - t0 = floor(X + frac(ell)) + floor(ell) + Z - Y for the verifier's
/// observed round trip. Throws std::domain_error unless X, Y, Z lie in
/// [0, 1/2] and ell > 0.
double measured_interval(double x, double y, double z, double ell);

/// P(Z - Y <= d) for independent Z, Y uniform on [0, 1/2].
double cdf_diff(double d);

/// P(t1 - t0 <= x) when the real round trip is ell.
double f_ell_cdf(double ell, double x);

/// Probability that the verifier accepts a round trip of R + h:
/// 1/2 for h <= 1/2, 1 - h below 1, 0 from 1 on. Throws std::domain_error
/// for h <= 0.
double p_error(double h);

/// Draws per shard in mc_estimate. Shard s is driven by mt19937_64 seeded
/// with splitmix64(seed + s), so the estimate depends only on (seed, n).
inline constexpr std::uint64_t kShardSize = 1u << 16;

/// Fraction of n draws of (X, Y, Z) whose measured interval is at most R,
/// with ell = R + h. `threads` only changes how shards are scheduled.
double mc_estimate(std::uint32_t r, double h, std::uint64_t n, std::uint64_t seed,
                   unsigned threads = 1);

std::uint64_t splitmix64(std::uint64_t x);

struct DensityRow {
  double x;
  double density;
};

/// Numeric derivative of f_ell_cdf over [floor(ell) - 1/2, floor(ell) + 3/2]
/// at resolution + 1 evenly spaced points; central differences inside,
/// one-sided at the ends. Throws std::domain_error for resolution < 2.
std::vector<DensityRow> density_table(double ell, std::uint32_t resolution);

/// `x,density` header, one LF-terminated row per point.
std::string density_csv(const std::vector<DensityRow>& table);

/// Trapezoid integral of the table.
double total_mass(const std::vector<DensityRow>& table);

/// Heights of the strict local maxima of the table, left to right.
std::vector<DensityRow> local_maxima(const std::vector<DensityRow>& table);

}  // namespace tmsr::prob
