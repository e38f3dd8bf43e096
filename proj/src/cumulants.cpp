#include "nls/cumulants.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "nls/error.hpp"

namespace nls {

namespace {

void check_order(int k, int cap, const char* what) {
  if (k < 1 || k > cap)
    fail(ErrorKind::SizeLimit, std::string(what) + ": order " + std::to_string(k) + " outside [1, " +
                                   std::to_string(cap) + "]");
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    require(std::isfinite(v), std::string(what) + ": non-finite value");
}

// mu(pi, 1_n) only depends on the number of blocks of pi.
std::vector<long long> mobius_to_top_by_blocks(int n) {
  std::vector<long long> mu(n + 1, 0);
  for (int k = 1; k <= n; ++k) mu[k] = mobius(SetPartition::bottom(k), SetPartition::top(k));
  return mu;
}

// Coefficients [z^0..z^max] of (sum_j m_j z^j)^power, m_0 = 1.
std::vector<double> series_power(const std::vector<double>& series, int power, int max_degree) {
  std::vector<double> result(max_degree + 1, 0.0);
  result[0] = 1.0;
  for (int p = 0; p < power; ++p) {
    std::vector<double> next(max_degree + 1, 0.0);
    for (int i = 0; i <= max_degree; ++i) {
      if (result[i] == 0.0) continue;
      for (int j = 0; i + j <= max_degree && j < static_cast<int>(series.size()); ++j)
        next[i + j] += result[i] * series[j];
    }
    result = std::move(next);
  }
  return result;
}

}  // namespace

MomentVector make_moments(std::vector<double> values) {
  require(!values.empty(), "MomentVector needs order >= 1");
  check_finite(values, "MomentVector");
  return MomentVector{std::move(values)};
}

CumulantVector make_cumulants(CumulantKind kind, std::vector<double> values) {
  require(!values.empty(), "CumulantVector needs order >= 1");
  check_finite(values, "CumulantVector");
  return CumulantVector{kind, std::move(values)};
}

CumulantVector classical_cumulants_from_moments(const MomentVector& m) {
  const int K = m.order();
  check_order(K, kMaxClassicalOrder, "classical_cumulants_from_moments");
  const auto mu = mobius_to_top_by_blocks(K);
  std::vector<double> c(K);
  for (int n = 1; n <= K; ++n) {
    double sum = 0.0;
    for_each_partition(n, [&](const SetPartition& pi) {
      double term = static_cast<double>(mu[pi.block_count()]);
      for (int size : pi.block_sizes()) term *= m[size];
      sum += term;
    });
    c[n - 1] = sum;
  }
  return {CumulantKind::Classical, std::move(c)};
}

MomentVector moments_from_classical_cumulants(const CumulantVector& c) {
  require(c.kind == CumulantKind::Classical, "moments_from_classical_cumulants: free cumulants given");
  const int K = c.order();
  check_order(K, kMaxClassicalOrder, "moments_from_classical_cumulants");
  std::vector<double> m(K);
  for (int n = 1; n <= K; ++n) {
    double sum = 0.0;
    for_each_partition(n, [&](const SetPartition& pi) {
      double term = 1.0;
      for (int size : pi.block_sizes()) term *= c[size];
      sum += term;
    });
    m[n - 1] = sum;
  }
  return {std::move(m)};
}

CumulantVector free_cumulants_by_mobius_sum(const MomentVector& m) {
  const int K = m.order();
  check_order(K, kFreeMobiusSumOrder, "free_cumulants_by_mobius_sum");
  std::vector<double> kappa(K);
  for (int n = 1; n <= K; ++n) {
    const auto nc = enumerate_noncrossing(n);
    const auto mu = noncrossing_mobius_to_top(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < nc.size(); ++i) {
      double term = static_cast<double>(mu[i]);
      for (int size : nc[i].block_sizes()) term *= m[size];
      sum += term;
    }
    kappa[n - 1] = sum;
  }
  return {CumulantKind::Free, std::move(kappa)};
}

// m_n = sum_{s=1}^n kappa_s [z^{n-s}] M(z)^s, grouping noncrossing
// partitions by the block that contains 1.
CumulantVector free_cumulants_by_recursion(const MomentVector& m) {
  const int K = m.order();
  check_order(K, kMaxFreeOrder, "free_cumulants_by_recursion");
  std::vector<double> series(K + 1, 0.0);
  series[0] = 1.0;
  for (int k = 1; k <= K; ++k) series[k] = m[k];
  std::vector<double> kappa(K, 0.0);
  for (int n = 1; n <= K; ++n) {
    double rest = 0.0;
    for (int s = 1; s < n; ++s) rest += kappa[s - 1] * series_power(series, s, n - s)[n - s];
    kappa[n - 1] = m[n] - rest;
  }
  return {CumulantKind::Free, std::move(kappa)};
}

CumulantVector free_cumulants_from_moments(const MomentVector& m) {
  check_finite(m.values, "free_cumulants_from_moments");
  if (m.order() <= kFreeMobiusSumOrder) return free_cumulants_by_mobius_sum(m);
  return free_cumulants_by_recursion(m);
}

MomentVector moments_from_free_cumulants(const CumulantVector& k) {
  require(k.kind == CumulantKind::Free, "moments_from_free_cumulants: classical cumulants given");
  const int K = k.order();
  check_order(K, kMaxFreeOrder, "moments_from_free_cumulants");
  std::vector<double> series(K + 1, 0.0);
  series[0] = 1.0;
  for (int n = 1; n <= K; ++n) {
    double sum = 0.0;
    for (int s = 1; s <= n; ++s) sum += k[s] * series_power(series, s, n - s)[n - s];
    series[n] = sum;
  }
  return {std::vector<double>(series.begin() + 1, series.end())};
}

// ---------------------------------------------------------------------------

std::vector<int> MixedFreeCumulants::canonical_rotation(std::vector<int> word) {
  std::vector<int> best = word;
  for (std::size_t r = 1; r < word.size(); ++r) {
    std::rotate(word.begin(), word.begin() + 1, word.end());
    if (word < best) best = word;
  }
  return best;
}

void MixedFreeCumulants::set(std::vector<int> word, double value) {
  require(!word.empty() && static_cast<int>(word.size()) <= order_, "MixedFreeCumulants: bad order");
  for (int r : word) require(r >= 0 && r < labels_, "MixedFreeCumulants: label out of range");
  values_[canonical_rotation(std::move(word))] = value;
}

bool MixedFreeCumulants::contains(std::vector<int> word) const {
  return values_.count(canonical_rotation(std::move(word))) != 0;
}

double MixedFreeCumulants::at(std::vector<int> word) const {
  auto it = values_.find(canonical_rotation(word));
  if (it == values_.end()) {
    std::string key;
    for (int r : word) key += (key.empty() ? "" : ",") + std::to_string(r + 1);
    fail(ErrorKind::InvalidArgument, "mixed free cumulant (" + key + ") not available");
  }
  return it->second;
}

MixedFreeCumulants mixed_free_cumulants_from_moments(
    int labels, int order, const std::function<double(const std::vector<int>&)>& moment) {
  require(labels >= 1, "mixed_free_cumulants_from_moments: need at least one label");
  check_order(order, kFreeMobiusSumOrder, "mixed_free_cumulants_from_moments");
  MixedFreeCumulants out(labels, order);
  std::map<std::vector<int>, double> kappa;  // by exact word (no rotation folding)
  for (int n = 1; n <= order; ++n) {
    const auto nc = enumerate_noncrossing(n);
    std::vector<int> word(n, 0);
    while (true) {
      // kappa(word) = phi(word) - sum over pi != 1_n of prod over blocks.
      double rest = 0.0;
      for (const auto& pi : nc) {
        if (pi.block_count() == 1) continue;
        double term = 1.0;
        for (const auto& block : pi.blocks()) {
          std::vector<int> sub;
          for (int e : block) sub.push_back(word[e - 1]);
          term *= kappa.at(sub);
        }
        rest += term;
      }
      const double value = moment(word) - rest;
      kappa[word] = value;
      out.set(word, value);
      int pos = n - 1;
      while (pos >= 0 && word[pos] == labels - 1) word[pos--] = 0;
      if (pos < 0) break;
      ++word[pos];
    }
  }
  return out;
}

void JointCumulantTable::set(std::vector<int> positions, double value) {
  std::sort(positions.begin(), positions.end());
  require(!positions.empty() && positions.front() >= 1 && positions.back() <= arity_,
          "JointCumulantTable: positions outside 1.." + std::to_string(arity_));
  values_[std::move(positions)] = value;
}

bool JointCumulantTable::contains(std::vector<int> positions) const {
  std::sort(positions.begin(), positions.end());
  return values_.count(positions) != 0;
}

double JointCumulantTable::at(std::vector<int> positions) const {
  std::sort(positions.begin(), positions.end());
  auto it = values_.find(positions);
  if (it == values_.end()) {
    std::string key;
    for (int p : positions) key += (key.empty() ? "" : ",") + std::to_string(p);
    fail(ErrorKind::InvalidArgument, "joint cumulant table has no entry for {" + key + "}");
  }
  return it->second;
}

double JointCumulantTable::product_over(const SetPartition& pi) const {
  double value = 1.0;
  for (const auto& block : pi.blocks()) value *= at(block);
  return value;
}

double leonov_shiryaev_expand(std::span<const int> group_sizes, const JointCumulantTable& table,
                              bool centered) {
  const SetPartition tau = interval_partition(group_sizes);
  require(tau.size() == table.arity(), "leonov_shiryaev_expand: table arity " +
                                           std::to_string(table.arity()) + " does not match " +
                                           std::to_string(tau.size()) + " arguments");
  check_order(tau.size(), kMaxClassicalOrder, "leonov_shiryaev_expand");
  double sum = 0.0;
  for (const auto& pi : leonov_shiryaev_partitions(tau, centered)) sum += table.product_over(pi);
  return sum;
}

double joint_cumulant_from_moments(int n, const std::function<double(const std::vector<int>&)>& moment) {
  check_order(n, kMaxClassicalOrder, "joint_cumulant_from_moments");
  const auto mu = mobius_to_top_by_blocks(n);
  double sum = 0.0;
  for_each_partition(n, [&](const SetPartition& pi) {
    double term = static_cast<double>(mu[pi.block_count()]);
    for (const auto& block : pi.blocks()) term *= moment(block);
    sum += term;
  });
  return sum;
}

MomentVector empirical_moments(std::span<const std::vector<double>> samples, int order) {
  require(!samples.empty(), "empirical_moments: no samples");
  require(order >= 1, "empirical_moments: order must be positive");
  std::vector<double> m(order, 0.0);
  for (const auto& sample : samples) {
    require(!sample.empty(), "empirical_moments: empty sample");
    std::vector<double> acc(order, 0.0);
    for (double x : sample) {
      double power = 1.0;
      for (int k = 0; k < order; ++k) {
        power *= x;
        acc[k] += power;
      }
    }
    for (int k = 0; k < order; ++k) m[k] += acc[k] / static_cast<double>(sample.size());
  }
  for (double& v : m) v /= static_cast<double>(samples.size());
  return {std::move(m)};
}

namespace {

double cumulant_of_subset(unsigned mask, int n, const std::vector<double>& means,
                          const std::vector<long long>& mu) {
  std::vector<int> members;
  for (int i = 0; i < n; ++i)
    if (mask & (1u << i)) members.push_back(i);
  const int k = static_cast<int>(members.size());
  double sum = 0.0;
  for_each_partition(k, [&](const SetPartition& pi) {
    double term = static_cast<double>(mu[pi.block_count()]);
    std::vector<unsigned> block_masks(pi.block_count(), 0u);
    for (int j = 0; j < k; ++j) block_masks[pi.label(j)] |= 1u << members[j];
    for (unsigned bm : block_masks) term *= means[bm];
    sum += term;
  });
  return sum;
}

}  // namespace

ProductMomentAccumulator::ProductMomentAccumulator(int arity)
    : arity_(arity), sums_(std::size_t{1} << std::clamp(arity, 0, 6), 0.0) {
  require(arity >= 1 && arity <= 6, "ProductMomentAccumulator: tuple size must be in 1..6");
}

void ProductMomentAccumulator::add(std::span<const double> tuple) {
  require(static_cast<int>(tuple.size()) == arity_, "ProductMomentAccumulator: tuple size mismatch");
  // Subset products via lowest-bit recursion: prod(S) = a_low(S) * prod(S \ low).
  double products[64];
  products[0] = 1.0;
  for (unsigned mask = 1; mask < sums_.size(); ++mask) {
    const int low = std::countr_zero(mask);
    products[mask] = tuple[low] * products[mask & (mask - 1)];
    sums_[mask] += products[mask];
  }
  ++count_;
}

void ProductMomentAccumulator::merge(const ProductMomentAccumulator& other) {
  require(other.arity_ == arity_, "ProductMomentAccumulator: merging different arities");
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += other.sums_[i];
  count_ += other.count_;
}

double ProductMomentAccumulator::cumulant() const {
  require(count_ >= 2, "empirical joint cumulant: need at least 2 observations");
  std::vector<double> means(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) means[i] = sums_[i] / static_cast<double>(count_);
  return cumulant_of_subset(static_cast<unsigned>(sums_.size() - 1), arity_, means,
                            mobius_to_top_by_blocks(arity_));
}

JointCumulantTable ProductMomentAccumulator::cumulant_table() const {
  require(count_ >= 2, "empirical joint cumulant: need at least 2 observations");
  std::vector<double> means(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) means[i] = sums_[i] / static_cast<double>(count_);
  const auto mu = mobius_to_top_by_blocks(arity_);
  JointCumulantTable table(arity_);
  for (unsigned mask = 1; mask < sums_.size(); ++mask) {
    std::vector<int> positions;
    for (int i = 0; i < arity_; ++i)
      if (mask & (1u << i)) positions.push_back(i + 1);
    table.set(positions, cumulant_of_subset(mask, arity_, means, mu));
  }
  return table;
}

namespace {

ProductMomentAccumulator accumulate(std::span<const std::vector<double>> observations) {
  require(observations.size() >= 2, "empirical joint cumulant: need at least 2 observations");
  const int n = static_cast<int>(observations.front().size());
  require(n >= 1 && n <= 6, "empirical joint cumulant: tuple size must be in 1..6");
  ProductMomentAccumulator acc(n);
  for (const auto& row : observations) acc.add(row);
  return acc;
}

}  // namespace

double empirical_joint_cumulant(std::span<const std::vector<double>> observations) {
  return accumulate(observations).cumulant();
}

JointCumulantTable empirical_joint_cumulant_table(std::span<const std::vector<double>> observations) {
  return accumulate(observations).cumulant_table();
}

}  // namespace nls
