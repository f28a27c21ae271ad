#pragma once

// Statistics for the within-subject evaluation. Every test is two-sided.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace a2p2::evalstats {

// 100 * (control - intervention) / control, unrounded. Error(domain_error)
// when control_mean <= 0.
double percent_reduction(double control_mean, double intervention_mean);

// Rounds half away from zero at `decimals` places, after snapping away
// representation error below 1e-9 of a unit in the last place.
double round_to(double value, int decimals);

class PairedSample {
 public:
  PairedSample() = default;
  // Error(validation_error) on unequal lengths or non-finite values.
  PairedSample(std::vector<double> intervention, std::vector<double> control);

  std::size_t size() const noexcept { return intervention_.size(); }
  const std::vector<double>& intervention() const noexcept { return intervention_; }
  const std::vector<double>& control() const noexcept { return control_; }
  // control - intervention, per pair.
  std::vector<double> differences() const;

 private:
  std::vector<double> intervention_;
  std::vector<double> control_;
};

struct Exact {};
struct MonteCarlo {
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
};
using PermutationMode = std::variant<Exact, MonteCarlo>;

// Exact enumeration is limited to this many pairs (2^n sign patterns).
inline constexpr std::size_t kMaxExactPairs = 26;

// Sign-flip test on the mean paired difference. Exact mode walks all 2^n
// patterns in Gray-code order; Monte Carlo returns (1 + hits) / (1 + draws).
// Error(empty_sample) with no pairs; Error(domain_error) for exact mode above
// kMaxExactPairs.
double paired_permutation_test(const PairedSample& sample, PermutationMode mode = Exact{});

// Label-shuffle test on the difference in means between two groups. Exact
// mode enumerates every split of the pooled values (at most 2^kMaxExactPairs).
double unpaired_permutation_test(std::span<const double> a, std::span<const double> b,
                                 PermutationMode mode = Exact{});

// rows {control, intervention} x columns {zero, one, two correct}
using ContingencyTable2x3 = std::array<std::array<std::int64_t, 3>, 2>;

struct FisherResult {
  double p = 1.0;
  double total_probability = 0.0;  // sum over every table with the observed margins
  std::size_t tables = 0;
};

// Freeman-Halton exact test: sum of the probabilities of margin-preserving
// tables no more probable than the observed one (relative tolerance 1e-7).
// Error(degenerate_table) on a negative cell or any zero margin.
FisherResult fisher_exact_2x3(const ContingencyTable2x3& table);

// Same test for 2 x k tables (k >= 2); zero margins are an error here too.
FisherResult fisher_exact_2xk(std::span<const std::int64_t> row0, std::span<const std::int64_t> row1);

enum class DVariant { dz, pooled };

std::string_view to_string(DVariant v) noexcept;

struct EffectSize {
  double value = 0.0;
  DVariant variant = DVariant::dz;
};

// dz = mean(control - intervention) / sd(control - intervention);
// pooled = (mean_c - mean_i) / pooled sd. Sample standard deviations.
// Error(validation_error) below two pairs; Error(zero_variance) when the
// relevant dispersion is zero.
EffectSize cohens_d(const PairedSample& sample, DVariant variant = DVariant::dz);

// Pooled-sd d for two independent groups, (mean_a - mean_b) / pooled sd.
double cohens_d_pooled(std::span<const double> a, std::span<const double> b);

// Standard SUS: odd items contribute (x - 1), even items (5 - x), sum * 2.5.
// Error(bad_item_count) unless 10 items; Error(out_of_range) outside 1..5.
double sus_score(std::span<const int> items);

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1).
double stddev(std::span<const double> xs);

}  // namespace a2p2::evalstats
