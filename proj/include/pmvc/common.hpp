#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>

namespace pmvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// SplitMix64 step; used to derive independent sub-seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for stream `stream` of root seed `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

/// round-half-away-from-zero, used for removal counts.
inline long round_half_away(double x) {
    return static_cast<long>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

/// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

}  // namespace pmvc
