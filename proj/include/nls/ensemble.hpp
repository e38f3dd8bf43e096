#pragma once

// GOE sampling, evaluation of matrix expressions, entrywise nonlinearities
// and the linear Gaussian-equivalent surrogate.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nls/expression.hpp"
#include "nls/gaussian.hpp"

namespace nls {

// Disjoint seed streams. Letters are further split by a label hash, so the
// noise matrices can never reuse a letter's stream.
enum class SeedStream : std::uint64_t {
  Letter = 1,
  Noise = 2,
  BaselineLetter = 3,
  BaselineNoise = 4,
  Relabel = 5,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t label_hash(std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t label, std::uint64_t index);

// Symmetric, off-diagonal N(0, 1/N), diagonal N(0, 2/N).
Eigen::MatrixXd sample_goe(int n, std::uint64_t seed);

struct RealizedMatrix {
  Eigen::MatrixXd entries;
  std::string expression_id;
  std::uint64_t index = 0;
  std::map<char, std::uint64_t> letter_seeds;

  int n() const { return static_cast<int>(entries.rows()); }
};

using LetterMatrices = std::map<char, Eigen::MatrixXd>;

// One GOE per letter of `letters`, seeded from (master, stream, letter, index).
LetterMatrices sample_letters(const std::string& letters, int n, std::uint64_t master, std::uint64_t index,
                              SeedStream stream = SeedStream::Letter,
                              std::map<char, std::uint64_t>* seeds_out = nullptr);

// Evaluates by repeated multiplication with shared subword products, then
// symmetrizes; throws Numeric if the asymmetry residual exceeds 1e-10
// relative before symmetrization.
Eigen::MatrixXd evaluate_expression(const MatrixExpression& expr, const LetterMatrices& letters);
std::vector<Eigen::MatrixXd> evaluate_tuple(const EnsembleTuple& tuple, const LetterMatrices& letters);

// All members of the tuple for realization `index`.
std::vector<RealizedMatrix> realize_tuple(const EnsembleTuple& tuple, int n, std::uint64_t master,
                                          std::uint64_t index, SeedStream stream = SeedStream::Letter);

// y_ij = (f(sqrt(N) x^(1)_ij, ...) - center) / sqrt(N) for i != j, y_ii = 0.
Eigen::MatrixXd apply_nonlinearity(std::span<const Eigen::MatrixXd* const> inputs, const FunctionDescriptor& f,
                                   double center = 0.0);

// sum_r theta_r (X_r - shift_r I) + theta_noise Z. `shifts` may be empty.
Eigen::MatrixXd build_gaussian_equivalent(std::span<const Eigen::MatrixXd* const> inputs,
                                          const EquivalenceParams& params, const Eigen::MatrixXd& noise,
                                          std::span<const double> shifts = {});

}  // namespace nls
