#include "nls/partition.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <numeric>

#include "nls/error.hpp"

namespace nls {

namespace {

void check_size(int n, int cap, const char* what) {
  if (n < 0 || n > cap)
    fail(ErrorKind::SizeLimit, std::string(what) + ": size " + std::to_string(n) +
                                   " outside [0, " + std::to_string(cap) + "]");
}

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> parent;
};

}  // namespace

SetPartition SetPartition::from_labels(std::span<const int> labels) {
  const int n = static_cast<int>(labels.size());
  check_size(n, kMaxSize, "SetPartition");
  SetPartition p;
  p.n_ = static_cast<std::uint8_t>(n);
  std::array<int, kMaxSize> seen{};
  int count = 0;
  for (int i = 0; i < n; ++i) {
    int b = 0;
    while (b < count && seen[b] != labels[i]) ++b;
    if (b == count) seen[count++] = labels[i];
    p.labels_[i] = static_cast<std::uint8_t>(b);
  }
  p.block_count_ = static_cast<std::uint8_t>(count);
  return p;
}

SetPartition SetPartition::from_blocks(int n, const std::vector<std::vector<int>>& blocks) {
  check_size(n, kMaxSize, "SetPartition");
  std::vector<int> labels(n, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    require(!blocks[b].empty(), "partition block must be nonempty");
    for (int e : blocks[b]) {
      require(e >= 1 && e <= n, "partition element " + std::to_string(e) + " outside 1.." + std::to_string(n));
      require(labels[e - 1] < 0, "partition element " + std::to_string(e) + " appears twice");
      labels[e - 1] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < n; ++i)
    require(labels[i] >= 0, "partition does not cover element " + std::to_string(i + 1));
  return from_labels(labels);
}

SetPartition SetPartition::parse(std::string_view text) {
  std::vector<std::vector<int>> blocks;
  int max_element = 0;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  };
  skip_ws();
  while (pos < text.size()) {
    require(text[pos] == '{', "expected '{' in partition \"" + std::string(text) + "\"");
    ++pos;
    std::vector<int> block;
    while (true) {
      skip_ws();
      int value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), value);
      require(ec == std::errc(), "expected element in partition \"" + std::string(text) + "\"");
      pos = static_cast<std::size_t>(ptr - text.data());
      block.push_back(value);
      max_element = std::max(max_element, value);
      skip_ws();
      require(pos < text.size(), "unterminated block in partition \"" + std::string(text) + "\"");
      if (text[pos] == ',') {
        ++pos;
        continue;
      }
      require(text[pos] == '}', "expected ',' or '}' in partition \"" + std::string(text) + "\"");
      ++pos;
      break;
    }
    blocks.push_back(std::move(block));
    skip_ws();
  }
  require(!blocks.empty(), "empty partition text");
  return from_blocks(max_element, blocks);
}

SetPartition SetPartition::bottom(int n) {
  check_size(n, kMaxSize, "SetPartition");
  SetPartition p;
  p.n_ = static_cast<std::uint8_t>(n);
  for (int i = 0; i < n; ++i) p.labels_[i] = static_cast<std::uint8_t>(i);
  p.block_count_ = static_cast<std::uint8_t>(n);
  return p;
}

SetPartition SetPartition::top(int n) {
  check_size(n, kMaxSize, "SetPartition");
  SetPartition p;
  p.n_ = static_cast<std::uint8_t>(n);
  p.block_count_ = n > 0 ? 1 : 0;
  return p;
}

std::vector<std::vector<int>> SetPartition::blocks() const {
  std::vector<std::vector<int>> out(block_count_);
  for (int i = 0; i < n_; ++i) out[labels_[i]].push_back(i + 1);
  return out;
}

std::vector<int> SetPartition::block_sizes() const {
  std::vector<int> sizes(block_count_, 0);
  for (int i = 0; i < n_; ++i) ++sizes[labels_[i]];
  return sizes;
}

bool SetPartition::refines(const SetPartition& coarser) const {
  if (coarser.n_ != n_) return false;
  std::array<int, kMaxSize> image;
  image.fill(-1);
  for (int i = 0; i < n_; ++i) {
    int& target = image[labels_[i]];
    if (target < 0)
      target = coarser.labels_[i];
    else if (target != coarser.labels_[i])
      return false;
  }
  return true;
}

bool SetPartition::is_pairing() const {
  if (n_ % 2 != 0) return false;
  for (int s : block_sizes())
    if (s != 2) return false;
  return true;
}

bool SetPartition::has_singleton() const {
  for (int s : block_sizes())
    if (s == 1) return true;
  return false;
}

bool SetPartition::is_noncrossing() const {
  // a < b < c < d with a ~ c, b ~ d, a !~ b.
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b) {
      if (labels_[b] == labels_[a]) continue;
      for (int c = b + 1; c < n_; ++c) {
        if (labels_[c] != labels_[a]) continue;
        for (int d = c + 1; d < n_; ++d)
          if (labels_[d] == labels_[b]) return false;
      }
    }
  return true;
}

bool SetPartition::is_interval_partition() const {
  for (int i = 1; i < n_; ++i)
    if (labels_[i] != labels_[i - 1] && labels_[i] != labels_[i - 1] + 1) return false;
  return true;
}

std::string SetPartition::to_string() const {
  std::string out;
  for (const auto& block : blocks()) {
    out += '{';
    for (std::size_t k = 0; k < block.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(block[k]);
    }
    out += '}';
  }
  return out;
}

SetPartition interval_partition(std::span<const int> group_sizes) {
  std::vector<int> labels;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    require(group_sizes[g] >= 1, "group sizes must be positive");
    labels.insert(labels.end(), static_cast<std::size_t>(group_sizes[g]), static_cast<int>(g));
  }
  return SetPartition::from_labels(labels);
}

// ---------------------------------------------------------------------------
// Enumeration

void for_each_partition(int n, const std::function<void(const SetPartition&)>& visit) {
  check_size(n, kMaxPartitionSize, "enumerate_partitions");
  if (n == 0) return;
  // Iterative restricted-growth string successor.
  std::vector<int> rgs(n, 0), prefix_max(n, 0);
  while (true) {
    visit(SetPartition::from_labels(rgs));
    int i = n - 1;
    while (i > 0 && rgs[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) return;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (int j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
}

namespace {

void pairings_rec(std::vector<int>& labels, int next_label,
                  const std::function<void(const SetPartition&)>& visit) {
  const int n = static_cast<int>(labels.size());
  int first = -1;
  for (int i = 0; i < n; ++i)
    if (labels[i] < 0) {
      first = i;
      break;
    }
  if (first < 0) {
    visit(SetPartition::from_labels(labels));
    return;
  }
  labels[first] = next_label;
  for (int j = first + 1; j < n; ++j) {
    if (labels[j] >= 0) continue;
    labels[j] = next_label;
    pairings_rec(labels, next_label + 1, visit);
    labels[j] = -1;
  }
  labels[first] = -1;
}

// Builds noncrossing partitions element by element. `open` holds the blocks
// that may still receive elements, oldest first; putting an element into an
// open block closes every block opened after it.
void noncrossing_rec(std::vector<int>& labels, int pos, int blocks, std::vector<int>& open,
                     const std::function<void(const SetPartition&)>& visit) {
  const int n = static_cast<int>(labels.size());
  if (pos == n) {
    visit(SetPartition::from_labels(labels));
    return;
  }
  for (std::size_t k = 0; k < open.size(); ++k) {
    std::vector<int> saved(open.begin() + static_cast<std::ptrdiff_t>(k) + 1, open.end());
    open.resize(k + 1);
    labels[pos] = open[k];
    noncrossing_rec(labels, pos + 1, blocks, open, visit);
    open.insert(open.end(), saved.begin(), saved.end());
  }
  labels[pos] = blocks;
  open.push_back(blocks);
  noncrossing_rec(labels, pos + 1, blocks + 1, open, visit);
  open.pop_back();
}

}  // namespace

void for_each_pairing(int n, const std::function<void(const SetPartition&)>& visit) {
  check_size(n, kMaxPairingSize, "enumerate_pairings");
  if (n == 0 || n % 2 != 0) return;
  std::vector<int> labels(n, -1);
  pairings_rec(labels, 0, visit);
}

void for_each_noncrossing(int n, const std::function<void(const SetPartition&)>& visit) {
  check_size(n, kMaxNoncrossingSize, "enumerate_noncrossing");
  if (n == 0) return;
  std::vector<int> labels(n, 0);
  std::vector<int> open;
  noncrossing_rec(labels, 0, 0, open, visit);
}

std::vector<SetPartition> enumerate_partitions(int n) {
  std::vector<SetPartition> out;
  if (n >= 0 && n <= kMaxPartitionSize) out.reserve(bell_number(n));
  for_each_partition(n, [&](const SetPartition& p) { out.push_back(p); });
  return out;
}

std::vector<SetPartition> enumerate_pairings(int n) {
  std::vector<SetPartition> out;
  for_each_pairing(n, [&](const SetPartition& p) { out.push_back(p); });
  return out;
}

std::vector<SetPartition> enumerate_noncrossing(int n) {
  std::vector<SetPartition> out;
  if (n >= 0 && n <= kMaxNoncrossingSize) out.reserve(catalan_number(n));
  for_each_noncrossing(n, [&](const SetPartition& p) { out.push_back(p); });
  return out;
}

// ---------------------------------------------------------------------------
// Lattice operations

SetPartition join(const SetPartition& p, const SetPartition& q) {
  require(p.size() == q.size(), "join: partitions of different ground sets (" +
                                    std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  const int n = p.size();
  UnionFind uf(n);
  std::array<int, SetPartition::kMaxSize> first_p, first_q;
  first_p.fill(-1);
  first_q.fill(-1);
  for (int i = 0; i < n; ++i) {
    int& fp = first_p[p.label(i)];
    if (fp < 0) fp = i; else uf.unite(fp, i);
    int& fq = first_q[q.label(i)];
    if (fq < 0) fq = i; else uf.unite(fq, i);
  }
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = uf.find(i);
  return SetPartition::from_labels(labels);
}

namespace {

// Moebius value mu(0_k, 1_k) of a full partition lattice, from the defining
// recursion sum_{0 <= t <= 1} mu(0, t) = 0. Elements t < 1 are grouped by
// their block-size type lambda; [0, t] is a product of smaller full lattices.
class FullLatticeMobius {
 public:
  long long operator()(int k) {
    if (k < static_cast<int>(memo_.size()) && memo_[k] != kUnset) return memo_[k];
    if (memo_.size() <= static_cast<std::size_t>(k)) memo_.resize(k + 1, kUnset);
    long long value;
    if (k <= 1) {
      value = 1;
    } else {
      long long lower_sum = 0;
      std::vector<int> parts;
      for_each_type(k, k - 1, parts, [&](const std::vector<int>& type) {
        long long term = count_of_type(k, type);
        for (int part : type) term *= (*this)(part);
        lower_sum += term;
      });
      value = -lower_sum;
    }
    memo_[k] = value;
    return value;
  }

 private:
  static constexpr long long kUnset = std::numeric_limits<long long>::min();

  // Integer partitions of `remaining` with parts <= max_part, non-increasing.
  template <class F>
  static void for_each_type(int remaining, int max_part, std::vector<int>& parts, F&& emit) {
    if (remaining == 0) {
      emit(parts);
      return;
    }
    for (int part = std::min(max_part, remaining); part >= 1; --part) {
      parts.push_back(part);
      for_each_type(remaining - part, part, parts, emit);
      parts.pop_back();
    }
  }

  // Number of set partitions of [k] with the given block sizes:
  // k! / (prod part! * prod multiplicity!).
  static long long count_of_type(int k, const std::vector<int>& type) {
    // Build it multiplicatively with exact binomials to stay in range.
    long long count = 1;
    int remaining = k;
    std::map<int, int> multiplicity;
    for (int part : type) {
      count *= binomial(remaining, part);
      remaining -= part;
      ++multiplicity[part];
    }
    for (auto [part, m] : multiplicity)
      for (int j = 2; j <= m; ++j) count /= j;
    return count;
  }

  static long long binomial(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  std::vector<long long> memo_;
};

}  // namespace

long long mobius(const SetPartition& lower, const SetPartition& upper) {
  require(lower.size() == upper.size(), "mobius: partitions of different ground sets");
  require(lower.refines(upper), "mobius: " + lower.to_string() + " is not below " + upper.to_string());
  // [lower, upper] is isomorphic to the product, over blocks B of upper, of
  // full partition lattices on the blocks of lower contained in B.
  std::vector<int> atoms_per_block(upper.block_count(), 0);
  std::vector<bool> seen(lower.block_count(), false);
  for (int i = 0; i < lower.size(); ++i) {
    if (seen[lower.label(i)]) continue;
    seen[lower.label(i)] = true;
    ++atoms_per_block[upper.label(i)];
  }
  FullLatticeMobius full;
  long long value = 1;
  for (int k : atoms_per_block) value *= full(k);
  return value;
}

std::vector<long long> noncrossing_mobius_to_top(int n) {
  check_size(n, 8, "noncrossing_mobius_to_top");
  auto nc = enumerate_noncrossing(n);
  std::vector<std::size_t> order(nc.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nc[a].block_count() < nc[b].block_count();
  });
  std::vector<long long> mu(nc.size(), 0);
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const std::size_t i = order[idx];
    if (nc[i].block_count() == 1) {
      mu[i] = 1;
      continue;
    }
    long long sum = 0;
    for (std::size_t jdx = 0; jdx < idx; ++jdx) {
      const std::size_t j = order[jdx];
      if (nc[j].block_count() < nc[i].block_count() && nc[i].refines(nc[j])) sum += mu[j];
    }
    mu[i] = -sum;
  }
  return mu;
}

SetPartition kernel(std::span<const int> word) {
  return SetPartition::from_labels(word);
}

// ---------------------------------------------------------------------------
// Cycle structure of entry tuples

CycleStructure cycle_structure(std::span<const IndexPair> entries) {
  require(!entries.empty(), "cycle_structure: no entries");
  CycleStructure out;

  std::map<int, int> vertex_id;
  for (const auto& e : entries) {
    vertex_id.try_emplace(e.row, static_cast<int>(vertex_id.size()));
    vertex_id.try_emplace(e.col, static_cast<int>(vertex_id.size()));
  }
  const int nv = static_cast<int>(vertex_id.size());
  const int ne = static_cast<int>(entries.size());
  std::vector<int> vertex_of(nv);
  for (auto [index, id] : vertex_id) vertex_of[id] = index;

  UnionFind uf(nv);
  std::vector<int> degree(nv, 0);
  std::vector<std::vector<int>> incident(nv);
  for (int e = 0; e < ne; ++e) {
    const int a = vertex_id[entries[e].row], b = vertex_id[entries[e].col];
    uf.unite(a, b);
    degree[a] += 1;
    degree[b] += 1;
    incident[a].push_back(e);
    if (a != b) incident[b].push_back(e);
  }

  std::map<std::pair<int, int>, int> multiplicity;
  for (const auto& e : entries) ++multiplicity[{std::min(e.row, e.col), std::max(e.row, e.col)}];
  for (auto [edge, m] : multiplicity)
    if (m > 1) out.shared_edges.push_back({edge.first, edge.second});

  for (int v = 0; v < nv; ++v)
    if (degree[v] % 2 != 0) {
      out.cycles = 0;
      out.diagnostic = "index " + std::to_string(vertex_of[v]) +
                       " has odd degree; the entries do not close into cycles";
      return out;
    }

  // One Eulerian circuit per connected component (Hierholzer).
  std::vector<bool> used(ne, false);
  std::vector<std::size_t> cursor(nv, 0);
  std::vector<bool> component_done(nv, false);
  struct Cycle {
    std::vector<IndexPair> walk;
    int distinct_vertices;
  };
  std::vector<Cycle> cycles;
  for (int start_edge = 0; start_edge < ne; ++start_edge) {
    const int root = uf.find(vertex_id[entries[start_edge].row]);
    if (component_done[root]) continue;
    component_done[root] = true;

    const int start = vertex_id[entries[start_edge].row];
    std::vector<std::pair<int, int>> stack{{start, -1}};  // (vertex, edge used to arrive)
    std::vector<IndexPair> circuit;
    while (!stack.empty()) {
      const int v = stack.back().first;
      while (cursor[v] < incident[v].size() && used[incident[v][cursor[v]]]) ++cursor[v];
      if (cursor[v] == incident[v].size()) {
        const int arrived_by = stack.back().second;
        stack.pop_back();
        if (arrived_by >= 0) {
          const int from = stack.back().first;
          circuit.push_back({vertex_of[from], vertex_of[v]});
        }
        continue;
      }
      const int e = incident[v][cursor[v]];
      used[e] = true;
      const int a = vertex_id[entries[e].row], b = vertex_id[entries[e].col];
      stack.push_back({a == v ? b : a, e});
    }
    std::reverse(circuit.begin(), circuit.end());
    std::vector<int> distinct;
    for (const auto& step : circuit) distinct.push_back(step.row);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    cycles.push_back({std::move(circuit), static_cast<int>(distinct.size())});
  }

  std::stable_sort(cycles.begin(), cycles.end(),
                   [](const Cycle& a, const Cycle& b) { return a.walk.size() > b.walk.size(); });
  out.cycles = static_cast<int>(cycles.size());
  for (auto& c : cycles) {
    out.lengths.push_back(static_cast<int>(c.walk.size()));
    if (c.distinct_vertices < static_cast<int>(c.walk.size())) out.has_subcycles = true;
    out.arrangement.push_back(std::move(c.walk));
  }
  return out;
}

std::vector<SetPartition> leonov_shiryaev_partitions(const SetPartition& tau, bool no_singletons) {
  require(tau.is_interval_partition(), "leonov_shiryaev_partitions: tau " + tau.to_string() +
                                           " is not an interval partition");
  const int n = tau.size();
  const SetPartition one = SetPartition::top(n);
  std::vector<SetPartition> out;
  for_each_partition(n, [&](const SetPartition& pi) {
    if (no_singletons && pi.has_singleton()) return;
    if (join(pi, tau) == one) out.push_back(pi);
  });
  return out;
}

WordGraph word_graph(std::span<const int> word, bool cyclic) {
  WordGraph g;
  g.vertices.assign(word.begin(), word.end());
  std::sort(g.vertices.begin(), g.vertices.end());
  g.vertices.erase(std::unique(g.vertices.begin(), g.vertices.end()), g.vertices.end());
  g.walk.assign(word.begin(), word.end());
  const std::size_t n = word.size();
  const std::size_t steps = cyclic ? n : (n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < steps; ++i) {
    const int s = word[i], t = word[(i + 1) % n];
    const std::pair<int, int> edge{std::min(s, t), std::max(s, t)};
    g.edges.push_back(edge);
    (s == t ? g.self_edges : g.connecting_edges).push_back(edge);
  }
  if (cyclic && n > 0) g.walk.push_back(word[0]);

  // Connectivity over the listed edges (a single letter is connected).
  std::map<int, int> id;
  for (int v : g.vertices) id.emplace(v, static_cast<int>(id.size()));
  UnionFind uf(static_cast<int>(id.size()));
  for (auto [s, t] : g.edges) uf.unite(id[s], id[t]);
  for (const auto& [v, i] : id)
    if (uf.find(i) != 0) g.connected = false;
  return g;
}

unsigned long long bell_number(int n) {
  require(n >= 0, "bell_number: n must be nonnegative");
  if (n > 25) fail(ErrorKind::SizeLimit, "bell_number: B(" + std::to_string(n) + ") overflows 64 bits (n <= 25)");
  // Bell triangle.
  std::vector<unsigned long long> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<unsigned long long> next{row.back()};
    for (unsigned long long v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

unsigned long long catalan_number(int n) {
  require(n >= 0, "catalan_number: n must be nonnegative");
  if (n > 33) fail(ErrorKind::SizeLimit, "catalan_number: C(" + std::to_string(n) + ") overflows 64 bits (n <= 33)");
  unsigned long long c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

unsigned long long double_factorial(int n) {
  require(n >= -1, "double_factorial: n must be at least -1");
  if (n > 33) fail(ErrorKind::SizeLimit, "double_factorial: " + std::to_string(n) + "!! overflows 64 bits (n <= 33)");
  unsigned long long r = 1;
  for (int k = n; k > 1; k -= 2) r *= static_cast<unsigned long long>(k);
  return r;
}

}  // namespace nls
