#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace iemppo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Column-major sample layout: one column per sample.
using Rng = std::mt19937_64;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
  kPolicyInit = 1,
  kValueInit = 2,
  kIntrinsicInit = 3,
  kEnv = 4,
  kShuffle = 5,
  kNoise = 6,
  kPairs = 7,
  kIntrinsicShuffle = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeds the generator for `stream` from a counter-based hash of
/// (master_seed, stream id), so streams never depend on draw order elsewhere.
inline Rng make_stream(std::uint64_t master_seed, Stream stream) {
  const auto id = static_cast<std::uint64_t>(stream);
  return Rng{splitmix64(splitmix64(master_seed) ^ splitmix64(id * 0x632be59bd9b4e019ULL))};
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

}  // namespace iemppo
