#pragma once

#include "heppcat/model.hpp"

#include <cstdint>
#include <random>

namespace heppcat {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream coordinates (e.g. trial and group index) so
/// that every stream is reproducible independently of the order it is drawn in.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0);

inline Rng make_rng(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(derive_seed(base, a, b));
}

/// Matrix with i.i.d. standard normal entries, filled column by column.
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

}  // namespace heppcat
