#include "a2p2/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "a2p2/error.hpp"
#include "a2p2/random.hpp"

namespace a2p2::evalstats {

double percent_reduction(double control_mean, double intervention_mean) {
  if (!(control_mean > 0.0)) {
    throw Error(Errc::domain_error, "control mean must be positive, got " + std::to_string(control_mean));
  }
  return 100.0 * (control_mean - intervention_mean) / control_mean;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  const double lower = std::floor(scaled);
  const double frac = scaled - lower;
  double r;
  if (std::fabs(frac - 0.5) < 1e-9) {
    r = scaled >= 0 ? lower + 1.0 : lower;
  } else {
    r = std::round(scaled);
  }
  return r / scale;
}

PairedSample::PairedSample(std::vector<double> intervention, std::vector<double> control)
    : intervention_(std::move(intervention)), control_(std::move(control)) {
  if (intervention_.size() != control_.size()) {
    throw Error(Errc::validation_error, "paired sample has " + std::to_string(intervention_.size()) +
                                            " intervention and " + std::to_string(control_.size()) + " control values");
  }
  for (std::size_t i = 0; i < intervention_.size(); ++i) {
    if (!std::isfinite(intervention_[i]) || !std::isfinite(control_[i])) {
      throw Error(Errc::validation_error, "non-finite value in pair " + std::to_string(i));
    }
  }
}

std::vector<double> PairedSample::differences() const {
  std::vector<double> d(size());
  for (std::size_t i = 0; i < size(); ++i) d[i] = control_[i] - intervention_[i];
  return d;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(Errc::empty_sample, "mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(Errc::validation_error, "standard deviation needs at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

// Ties within this tolerance of the observed statistic count as "at least as
// extreme"; Gray-code accumulation drifts by a few ulps.
double tie_tolerance(std::span<const double> values) {
  double scale = 0.0;
  for (double v : values) scale += std::fabs(v);
  return 1e-9 * std::max(scale, 1.0);
}

}  // namespace

double paired_permutation_test(const PairedSample& sample, PermutationMode mode) {
  const std::size_t n = sample.size();
  if (n == 0) throw Error(Errc::empty_sample, "paired permutation test on an empty sample");
  const auto d = sample.differences();
  const double observed = std::fabs(std::accumulate(d.begin(), d.end(), 0.0));
  const double threshold = observed - tie_tolerance(d);

  if (std::holds_alternative<Exact>(mode)) {
    if (n > kMaxExactPairs) {
      throw Error(Errc::domain_error, "exact sign-flip enumeration limited to " + std::to_string(kMaxExactPairs) + " pairs");
    }
    // Gray code: pattern k differs from k-1 in bit ctz(k).
    std::vector<int> sign(n, 1);
    double sum = std::accumulate(d.begin(), d.end(), 0.0);
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t hits = std::fabs(sum) >= threshold ? 1 : 0;
    for (std::uint64_t k = 1; k < total; ++k) {
      const auto bit = static_cast<std::size_t>(__builtin_ctzll(k));
      sum -= 2.0 * sign[bit] * d[bit];
      sign[bit] = -sign[bit];
      if (std::fabs(sum) >= threshold) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
  }

  const auto& mc = std::get<MonteCarlo>(mode);
  Rng rng(mc.seed);
  std::uint64_t hits = 0;
  for (std::size_t draw = 0; draw < mc.draws; ++draw) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng();
      sum += ((bits >> (i % 64)) & 1U) ? -d[i] : d[i];
    }
    if (std::fabs(sum) >= threshold) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + mc.draws);
}

double unpaired_permutation_test(std::span<const double> a, std::span<const double> b, PermutationMode mode) {
  if (a.empty() || b.empty()) throw Error(Errc::empty_sample, "unpaired permutation test needs two non-empty groups");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const auto stat = [&](double sum_a) {
    return sum_a / static_cast<double>(na) - (total - sum_a) / static_cast<double>(n - na);
  };
  const double observed = std::fabs(stat(std::accumulate(a.begin(), a.end(), 0.0)));
  const double threshold = observed - tie_tolerance(pooled);

  if (std::holds_alternative<Exact>(mode)) {
    if (n > kMaxExactPairs) {
      throw Error(Errc::domain_error, "exact label enumeration limited to " + std::to_string(kMaxExactPairs) + " values");
    }
    std::uint64_t hits = 0;
    std::uint64_t splits = 0;
    // Every subset of size na, by index recursion.
    const auto walk = [&](auto&& self, std::size_t start, std::size_t left, double sum) -> void {
      if (left == 0) {
        ++splits;
        if (std::fabs(stat(sum)) >= threshold) ++hits;
        return;
      }
      for (std::size_t i = start; i + left <= n; ++i) self(self, i + 1, left - 1, sum + pooled[i]);
    };
    walk(walk, 0, na, 0.0);
    return static_cast<double>(hits) / static_cast<double>(splits);
  }

  const auto& mc = std::get<MonteCarlo>(mode);
  Rng rng(mc.seed);
  std::uint64_t hits = 0;
  std::vector<double> work = pooled;
  for (std::size_t draw = 0; draw < mc.draws; ++draw) {
    shuffle(std::span<double>(work), rng);
    const double sum_a = std::accumulate(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
    if (std::fabs(stat(sum_a)) >= threshold) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(1 + mc.draws);
}

namespace {

double lchoose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

}  // namespace

FisherResult fisher_exact_2xk(std::span<const std::int64_t> row0, std::span<const std::int64_t> row1) {
  const std::size_t k = row0.size();
  if (k < 2 || row1.size() != k) throw Error(Errc::degenerate_table, "table must be 2 x k with k >= 2");
  std::vector<std::int64_t> cols(k);
  std::int64_t r0 = 0;
  std::int64_t r1 = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (row0[j] < 0 || row1[j] < 0) throw Error(Errc::degenerate_table, "negative cell");
    cols[j] = row0[j] + row1[j];
    r0 += row0[j];
    r1 += row1[j];
    if (cols[j] == 0) throw Error(Errc::degenerate_table, "column " + std::to_string(j) + " has a zero margin");
  }
  if (r0 == 0 || r1 == 0) throw Error(Errc::degenerate_table, "a row has a zero margin");
  const std::int64_t total = r0 + r1;

  // P(first row = x) = prod_j C(c_j, x_j) / C(N, r0)
  const double denom = lchoose(total, r0);
  const auto log_p = [&](std::span<const std::int64_t> x) {
    double lp = -denom;
    for (std::size_t j = 0; j < k; ++j) lp += lchoose(cols[j], x[j]);
    return lp;
  };
  const double p_obs = std::exp(log_p(row0));
  const double cutoff = p_obs * (1.0 + 1e-7);

  FisherResult out;
  out.p = 0.0;
  std::vector<std::int64_t> x(k, 0);
  // Fill the first k-1 cells of row 0; the last is forced by the row margin.
  const auto walk = [&](auto&& self, std::size_t j, std::int64_t left) -> void {
    if (j + 1 == k) {
      if (left > cols[j]) return;
      x[j] = left;
      const double p = std::exp(log_p(x));
      out.total_probability += p;
      ++out.tables;
      if (p <= cutoff) out.p += p;
      return;
    }
    for (std::int64_t v = 0; v <= std::min(cols[j], left); ++v) {
      x[j] = v;
      self(self, j + 1, left - v);
    }
  };
  walk(walk, 0, r0);
  out.p = std::min(out.p, 1.0);
  return out;
}

FisherResult fisher_exact_2x3(const ContingencyTable2x3& table) {
  return fisher_exact_2xk(std::span<const std::int64_t>(table[0]), std::span<const std::int64_t>(table[1]));
}

std::string_view to_string(DVariant v) noexcept { return v == DVariant::dz ? "dz" : "pooled"; }

EffectSize cohens_d(const PairedSample& sample, DVariant variant) {
  if (sample.size() < 2) throw Error(Errc::validation_error, "Cohen's d needs at least two pairs");
  if (variant == DVariant::dz) {
    const auto d = sample.differences();
    const double sd = stddev(d);
    if (sd == 0.0) throw Error(Errc::zero_variance, "paired differences have zero variance");
    return {mean(d) / sd, variant};
  }
  return {cohens_d_pooled(sample.control(), sample.intervention()), variant};
}

double cohens_d_pooled(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(Errc::validation_error, "pooled d needs at least two values per group");
  const double sa = stddev(a);
  const double sb = stddev(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = std::sqrt(((na - 1) * sa * sa + (nb - 1) * sb * sb) / (na + nb - 2));
  if (pooled == 0.0) throw Error(Errc::zero_variance, "both groups have zero variance");
  return (mean(a) - mean(b)) / pooled;
}

double sus_score(std::span<const int> items) {
  if (items.size() != 10) throw Error(Errc::bad_item_count, "SUS needs 10 items, got " + std::to_string(items.size()));
  int sum = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int x = items[i];
    if (x < 1 || x > 5) throw Error(Errc::out_of_range, "SUS item " + std::to_string(i + 1) + " is " + std::to_string(x));
    sum += (i % 2 == 0) ? x - 1 : 5 - x;
  }
  return sum * 2.5;
}

}  // namespace a2p2::evalstats
