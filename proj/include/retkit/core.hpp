#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace retkit {

template <class Scalar>
using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = Vec<double>;
using Matrix = Mat<double>;

enum class ErrorCode {
  InvalidTap,
  EmptyInput,
  InvalidToken,
  UnsupportedOption,
  DimensionMismatch,
  EmptySample,
  InvalidArgument,
  SequenceTooLong,
  BackendFailure,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Toolkit-wide exception. `code()` identifies the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Cosine similarity. The denominator is sqrt(|a|^2 * |b|^2) so that
/// bitwise-identical inputs yield exactly 1.0. Zero vectors map to 0.
template <class A, class B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const double num = a.template cast<double>().dot(b.template cast<double>());
  const double den =
      std::sqrt(a.template cast<double>().squaredNorm() * b.template cast<double>().squaredNorm());
  if (den == 0.0) return 0.0;
  return num / den;
}

template <class D>
Vec<typename D::Scalar> l2_normalized(const Eigen::MatrixBase<D>& v) {
  const auto norm = v.norm();
  if (norm < typename D::Scalar(1e-12)) {
    throw Error(ErrorCode::BackendFailure, "cannot normalize a (near-)zero vector");
  }
  return v / norm;
}

double log_sum_exp(const Vector& z);
Vector softmax(const Vector& z);

/// exp(z1) / (exp(z1) + exp(z2)), evaluated in the numerically stable form.
inline double two_way_softmax(double z1, double z2) { return 1.0 / (1.0 + std::exp(z2 - z1)); }

/// Index of the maximum entry; ties resolve to the lowest index.
int argmax_lowest(const Vector& z);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

/// SplitMix64: tiny deterministic generator used for reproducible weights
/// and test data. Identical sequences on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [-scale, scale].
  double symmetric(double scale) { return (2.0 * uniform() - 1.0) * scale; }

 private:
  std::uint64_t state_;
};

/// Runs fn(0..n-1), splitting the range over at most `jobs` threads.
/// Results must be written to disjoint slots; output is order-independent.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Two-pass mean and population standard deviation (exact zeros for
/// constant samples).
MeanStd mean_std(const std::vector<double>& values);

}  // namespace retkit
