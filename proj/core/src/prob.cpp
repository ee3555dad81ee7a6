#include "tmsr/prob.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace tmsr::prob {

double measured_interval(double x, double y, double z, double ell) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 0.5; };
  if (!in_range(x) || !in_range(y) || !in_range(z)) {
    throw std::domain_error("X, Y and Z must lie in [0, 1/2]");
  }
  if (!(ell > 0.0)) throw std::domain_error("ell must be positive");
  const double whole = std::floor(ell);
  const double frac = ell - whole;
  return std::floor(x + frac) + whole + z - y;
}

double cdf_diff(double d) {
  if (d <= -0.5) return 0.0;
  if (d <= 0.0) return 2.0 * (d + 0.5) * (d + 0.5);
  if (d <= 0.5) return 1.0 - 2.0 * (0.5 - d) * (0.5 - d);
  return 1.0;
}

double f_ell_cdf(double ell, double x) {
  if (!(ell > 0.0)) throw std::domain_error("ell must be positive");
  const double whole = std::floor(ell);
  const double frac = ell - whole;
  if (frac < 0.5) return cdf_diff(x - whole);
  return (2.0 - 2.0 * frac) * cdf_diff(x - whole) + (2.0 * frac - 1.0) * cdf_diff(x - whole - 1.0);
}

double p_error(double h) {
  if (!(h > 0.0)) throw std::domain_error("h must be positive");
  if (h <= 0.5) return 0.5;
  if (h < 1.0) return 1.0 - h;
  return 0.0;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

// Uniform on [0, 1/2) from the top 53 bits.
double half_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-54;
}

std::uint64_t run_shard(std::uint32_t r, double ell, std::uint64_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uint64_t hits = 0;
  const double bound = static_cast<double>(r);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = half_unit(gen);
    const double y = half_unit(gen);
    const double z = half_unit(gen);
    if (measured_interval(x, y, z, ell) <= bound) ++hits;
  }
  return hits;
}

}  // namespace

double mc_estimate(std::uint32_t r, double h, std::uint64_t n, std::uint64_t seed, unsigned threads) {
  if (n == 0) throw std::domain_error("N must be at least 1");
  if (!(h > 0.0)) throw std::domain_error("h must be positive");
  const double ell = static_cast<double>(r) + h;
  const std::uint64_t shards = (n + kShardSize - 1) / kShardSize;
  std::vector<std::uint64_t> hits(shards, 0);
  auto work = [&](std::uint64_t s) {
    const std::uint64_t count = std::min(kShardSize, n - s * kShardSize);
    hits[s] = run_shard(r, ell, count, splitmix64(seed + s));
  };
  if (threads <= 1 || shards == 1) {
    for (std::uint64_t s = 0; s < shards; ++s) work(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t s = w; s < shards; s += threads) work(s);
      });
    }
    for (auto& t : pool) t.join();
  }
  std::uint64_t total = 0;
  for (std::uint64_t v : hits) total += v;
  return static_cast<double>(total) / static_cast<double>(n);
}

std::vector<DensityRow> density_table(double ell, std::uint32_t resolution) {
  if (resolution < 2) throw std::domain_error("resolution must be at least 2");
  const double lo = std::floor(ell) - 0.5;
  const double hi = std::floor(ell) + 1.5;
  const double step = (hi - lo) / resolution;
  std::vector<DensityRow> out;
  out.reserve(resolution + 1);
  for (std::uint32_t i = 0; i <= resolution; ++i) {
    const double x = lo + step * i;
    double d;
    if (i == 0) {
      d = (f_ell_cdf(ell, x + step) - f_ell_cdf(ell, x)) / step;
    } else if (i == resolution) {
      d = (f_ell_cdf(ell, x) - f_ell_cdf(ell, x - step)) / step;
    } else {
      d = (f_ell_cdf(ell, x + step) - f_ell_cdf(ell, x - step)) / (2 * step);
    }
    out.push_back({x, d});
  }
  return out;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  out.append(buf, res.ptr);
}

}  // namespace

std::string density_csv(const std::vector<DensityRow>& table) {
  std::string out = "x,density\n";
  for (const DensityRow& row : table) {
    append_double(out, row.x);
    out += ',';
    append_double(out, row.density);
    out += '\n';
  }
  return out;
}

double total_mass(const std::vector<DensityRow>& table) {
  double sum = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    sum += (table[i].x - table[i - 1].x) * (table[i].density + table[i - 1].density) / 2;
  }
  return sum;
}

std::vector<DensityRow> local_maxima(const std::vector<DensityRow>& table) {
  std::vector<DensityRow> out;
  for (std::size_t i = 1; i + 1 < table.size(); ++i) {
    const double d = table[i].density;
    if (d > table[i - 1].density && d >= table[i + 1].density) out.push_back(table[i]);
  }
  return out;
}

}  // namespace tmsr::prob
