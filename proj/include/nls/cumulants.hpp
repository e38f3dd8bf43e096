#pragma once

// Moment <-> cumulant transforms (classical over all partitions, free over
// noncrossing partitions), the Leonov-Shiryaev expansion of cumulants of
// products, and plug-in estimators from samples.

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "nls/partition.hpp"

namespace nls {

inline constexpr int kMaxClassicalOrder = 12;
inline constexpr int kMaxFreeOrder = 16;
// Free cumulants use the full noncrossing Moebius sum up to this order and
// the triangular recursion above it.
inline constexpr int kFreeMobiusSumOrder = 8;

// Raw moments m_1..m_K (index 0 holds m_1).
struct MomentVector {
  std::vector<double> values;

  int order() const { return static_cast<int>(values.size()); }
  double operator[](int k) const { return values.at(static_cast<std::size_t>(k - 1)); }  // 1-based
};

enum class CumulantKind { Classical, Free };

struct CumulantVector {
  CumulantKind kind = CumulantKind::Free;
  std::vector<double> values;  // kappa_1..kappa_K

  int order() const { return static_cast<int>(values.size()); }
  double operator[](int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

// Joint free cumulants kappa_n^{(r_1..r_n)} of a family of l matrices,
// labels 0-based. Lookups are invariant under cyclic rotation of the labels.
class MixedFreeCumulants {
 public:
  MixedFreeCumulants(int labels, int order) : labels_(labels), order_(order) {}

  int labels() const { return labels_; }
  int order() const { return order_; }
  void set(std::vector<int> word, double value);
  bool contains(std::vector<int> word) const;
  double at(std::vector<int> word) const;  // throws if missing

 private:
  static std::vector<int> canonical_rotation(std::vector<int> word);

  int labels_;
  int order_;
  std::map<std::vector<int>, double> values_;
};

// Mixed free cumulants through `order` from a mixed-moment oracle
// moment(word) = phi(X_{r_1} ... X_{r_n}), via the free moment-cumulant
// formula over noncrossing partitions. order <= 8.
MixedFreeCumulants mixed_free_cumulants_from_moments(
    int labels, int order, const std::function<double(const std::vector<int>&)>& moment);

MomentVector make_moments(std::vector<double> values);
CumulantVector make_cumulants(CumulantKind kind, std::vector<double> values);

CumulantVector classical_cumulants_from_moments(const MomentVector& m);
MomentVector moments_from_classical_cumulants(const CumulantVector& c);

CumulantVector free_cumulants_from_moments(const MomentVector& m);
MomentVector moments_from_free_cumulants(const CumulantVector& k);

// The two free-cumulant routes, exposed so they can be compared directly.
CumulantVector free_cumulants_by_mobius_sum(const MomentVector& m);  // K <= 8
CumulantVector free_cumulants_by_recursion(const MomentVector& m);   // K <= 16

// Joint classical cumulants of arguments a_1..a_n, keyed by the sorted
// 1-based argument positions of a block. c({1,3}) = c_2(a_1, a_3).
class JointCumulantTable {
 public:
  explicit JointCumulantTable(int arity) : arity_(arity) {}

  int arity() const { return arity_; }
  void set(std::vector<int> positions, double value);
  bool contains(std::vector<int> positions) const;
  // Throws when the entry is missing.
  double at(std::vector<int> positions) const;
  // c_pi = product over blocks.
  double product_over(const SetPartition& pi) const;

 private:
  int arity_;
  std::map<std::vector<int>, double> values_;
};

// Classical cumulant of the products of consecutive groups of arguments,
// sum of c_pi over pi with pi v tau = 1_n. `centered` skips partitions with
// singleton blocks (first cumulants are zero).
double leonov_shiryaev_expand(std::span<const int> group_sizes, const JointCumulantTable& table,
                              bool centered);

// Joint cumulant c_n(a_1..a_n) from a mixed-moment oracle:
// moment(positions) = E[prod_{i in positions} a_i].
double joint_cumulant_from_moments(int n, const std::function<double(const std::vector<int>&)>& moment);

// Average over realizations of (1/N) sum_i lambda_i^k, k = 1..K.
MomentVector empirical_moments(std::span<const std::vector<double>> samples, int order);

// Streaming sums of prod_{i in S} a_i over observations, for every subset S
// of an n-tuple (n <= 6). Feeds the plug-in cumulant estimator without
// storing the observations.
class ProductMomentAccumulator {
 public:
  explicit ProductMomentAccumulator(int arity);

  int arity() const { return arity_; }
  long long count() const { return count_; }
  void add(std::span<const double> tuple);
  void merge(const ProductMomentAccumulator& other);

  // Plug-in joint cumulant of all n columns.
  double cumulant() const;
  // Plug-in joint cumulants of every subset of columns.
  JointCumulantTable cumulant_table() const;

 private:
  int arity_;
  long long count_ = 0;
  std::vector<double> sums_;  // indexed by subset bitmask
};

// Plug-in joint cumulant c_n of the columns of `observations` (M rows of an
// n-tuple): empirical product moments combined with the Moebius formula.
double empirical_joint_cumulant(std::span<const std::vector<double>> observations);

// Same estimator, for every subset of columns at once; keyed like
// JointCumulantTable.
JointCumulantTable empirical_joint_cumulant_table(std::span<const std::vector<double>> observations);

}  // namespace nls
