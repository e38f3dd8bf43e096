#pragma once

// Set partitions of [n] = {1..n} and the combinatorics built on them:
// enumeration (all, pairings, noncrossing), the refinement lattice (join,
// Moebius function), multi-index kernels, index-cycle detection for entry
// cumulants, and word graphs.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nls {

// Enumeration caps. Exceeding one is an error, never a silent truncation.
inline constexpr int kMaxPartitionSize = 12;
inline constexpr int kMaxPairingSize = 16;
inline constexpr int kMaxNoncrossingSize = 16;

// A partition of {1..n}, stored as its restricted-growth string: element i
// (0-based) carries the label of its block, blocks labelled 0,1,2,... in
// order of their least element. Two partitions are equal iff their labels
// are equal.
class SetPartition {
 public:
  static constexpr int kMaxSize = 24;

  SetPartition() = default;

  // Canonicalizes arbitrary labels (any integers) into restricted-growth form.
  static SetPartition from_labels(std::span<const int> labels);
  // Blocks use 1-based elements; they must be disjoint and cover 1..n.
  static SetPartition from_blocks(int n, const std::vector<std::vector<int>>& blocks);
  // Parses "{1,3}{2}". The ground-set size is the largest element.
  static SetPartition parse(std::string_view text);

  static SetPartition bottom(int n);  // n singletons
  static SetPartition top(int n);     // one block

  int size() const { return n_; }
  int block_count() const { return block_count_; }
  int label(int element) const { return labels_[element]; }
  std::span<const std::uint8_t> labels() const { return {labels_.data(), static_cast<std::size_t>(n_)}; }

  // Blocks as sorted 1-based element lists, ordered by least element.
  std::vector<std::vector<int>> blocks() const;
  std::vector<int> block_sizes() const;

  // True if every block of *this lies inside a block of `coarser`.
  bool refines(const SetPartition& coarser) const;
  bool is_pairing() const;
  bool is_noncrossing() const;
  bool has_singleton() const;
  // True if every block is a run of consecutive elements.
  bool is_interval_partition() const;

  std::string to_string() const;

  friend bool operator==(const SetPartition&, const SetPartition&) = default;
  friend std::strong_ordering operator<=>(const SetPartition& a, const SetPartition& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    for (int i = 0; i < a.n_; ++i)
      if (auto c = a.labels_[i] <=> b.labels_[i]; c != 0) return c;
    return std::strong_ordering::equal;
  }

 private:
  std::uint8_t n_ = 0;
  std::uint8_t block_count_ = 0;
  std::array<std::uint8_t, kMaxSize> labels_{};
};

// Partition of [n] whose blocks are the consecutive runs of the given sizes,
// e.g. {2,2} -> {1,2}{3,4}.
SetPartition interval_partition(std::span<const int> group_sizes);

// Visitors. The callback receives each partition once, in lexicographic
// order of restricted-growth strings.
void for_each_partition(int n, const std::function<void(const SetPartition&)>& visit);
void for_each_pairing(int n, const std::function<void(const SetPartition&)>& visit);
void for_each_noncrossing(int n, const std::function<void(const SetPartition&)>& visit);

std::vector<SetPartition> enumerate_partitions(int n);
std::vector<SetPartition> enumerate_pairings(int n);
std::vector<SetPartition> enumerate_noncrossing(int n);

// Least upper bound in the refinement order.
SetPartition join(const SetPartition& p, const SetPartition& q);

// Moebius function of the interval [lower, upper] of the partition lattice.
// Requires lower <= upper.
long long mobius(const SetPartition& lower, const SetPartition& upper);

// Moebius value mu(pi, 1_n) in the lattice of noncrossing partitions, for
// every pi in NC(n), aligned with enumerate_noncrossing(n). n <= 8.
std::vector<long long> noncrossing_mobius_to_top(int n);

// Kernel of a multi-index: k ~ l iff word[k] == word[l].
SetPartition kernel(std::span<const int> word);

// Cycle structure of a tuple of matrix entries x_{ij}, identified up to
// permuting the tuple and swapping i <-> j inside an entry.
struct IndexPair {
  int row;
  int col;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

struct CycleStructure {
  // Number of disjoint cycles; 0 when the entries cannot be arranged into
  // closed cycles (such joint cumulants vanish).
  int cycles = 0;
  std::vector<int> lengths;           // one per cycle, descending
  bool has_subcycles = false;         // some cycle revisits an index
  std::vector<IndexPair> shared_edges;  // unordered index pairs used more than once
  // A witness arrangement: entries reordered and oriented so that
  // consecutive entries chain (col == next row) and each cycle closes.
  std::vector<std::vector<IndexPair>> arrangement;
  std::string diagnostic;
};

CycleStructure cycle_structure(std::span<const IndexPair> entries);

// All pi with join(pi, tau) = 1_n. With `no_singletons`, partitions with a
// singleton block are excluded (the arguments are centered).
std::vector<SetPartition> leonov_shiryaev_partitions(const SetPartition& tau, bool no_singletons);

struct WordGraph {
  std::vector<int> vertices;                     // distinct letters, ascending
  std::vector<std::pair<int, int>> edges;        // walk order, (min, max)
  std::vector<std::pair<int, int>> self_edges;   // edges {s, s}
  std::vector<std::pair<int, int>> connecting_edges;  // edges {s, t}, s != t
  std::vector<int> walk;                         // the letters, closed if cyclic
  bool connected = true;
};

// Graph of a word s_1..s_n with edges {s_i, s_{i+1}}; when `cyclic` the
// closing edge {s_n, s_1} is included.
WordGraph word_graph(std::span<const int> word, bool cyclic);

// Counting helpers used by tests and the CLI.
unsigned long long bell_number(int n);
unsigned long long catalan_number(int n);
unsigned long long double_factorial(int n);  // n!! with (-1)!! = 0!! = 1

}  // namespace nls
