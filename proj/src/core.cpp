#include "retkit/core.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace retkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidTap: return "invalid-tap";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::InvalidToken: return "invalid-token";
    case ErrorCode::UnsupportedOption: return "unsupported-option";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptySample: return "empty-sample";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::SequenceTooLong: return "sequence-too-long";
    case ErrorCode::BackendFailure: return "backend-failure";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

double log_sum_exp(const Vector& z) {
  if (z.size() == 0) throw Error(ErrorCode::EmptyInput, "log_sum_exp of empty vector");
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

Vector softmax(const Vector& z) {
  if (z.size() == 0) throw Error(ErrorCode::EmptyInput, "softmax of empty vector");
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp();
  return e / e.sum();
}

int argmax_lowest(const Vector& z) {
  if (z.size() == 0) throw Error(ErrorCode::EmptyInput, "argmax of empty vector");
  int best = 0;
  for (int i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "mean_std of empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  double var = sq / static_cast<double>(values.size());
  if (var < 0.0) var = 0.0;
  return {mean, std::sqrt(var)};
}

}  // namespace retkit
