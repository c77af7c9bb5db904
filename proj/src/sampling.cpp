#include "rvos/sampling.hpp"

#include <algorithm>

#include "rvos/errors.hpp"
#include "rvos/rng.hpp"

namespace rvos {

std::string to_string(SamplingMethod m) { return m == SamplingMethod::local ? "local" : "global"; }

SamplingMethod parse_sampling_method(const std::string& s) {
  if (s == "local") return SamplingMethod::local;
  if (s == "global") return SamplingMethod::global;
  throw ValidationError("sampling.method: unknown value '" + s + "'");
}

namespace {

void check(int source_length, const SamplingPlan& plan) {
  if (source_length <= 0) throw DomainError("sampling: source length must be positive");
  if (plan.num_frames < 1) throw DomainError("sampling: num_frames must be >= 1");
}

std::vector<int> padded_full_range(int source_length, int num_frames) {
  std::vector<int> out;
  for (int i = 0; i < num_frames; ++i) out.push_back(std::min(i, source_length - 1));
  return out;
}

}  // namespace

std::vector<int> global_sample(int source_length, const SamplingPlan& plan) {
  check(source_length, plan);
  const long long L = source_length, T = plan.num_frames;
  if (L < T) return padded_full_range(source_length, plan.num_frames);
  Rng rng(plan.seed);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(T));
  for (long long i = 0; i < T; ++i) {
    const long long lo = i * L / T, hi = (i + 1) * L / T;
    out.push_back(static_cast<int>(rng.range(lo, hi)));
  }
  return out;
}

std::vector<int> local_sample(int source_length, const SamplingPlan& plan) {
  check(source_length, plan);
  const int L = source_length, T = plan.num_frames;
  if (L < T) return padded_full_range(source_length, plan.num_frames);
  Rng rng(plan.seed);
  const int center = static_cast<int>(rng.index(static_cast<std::uint64_t>(L)));
  const int start = std::clamp(center - T / 2, 0, L - T);
  std::vector<int> out;
  for (int i = 0; i < T; ++i) out.push_back(start + i);
  return out;
}

std::vector<int> sample_frames(int source_length, const SamplingPlan& plan) {
  return plan.method == SamplingMethod::local ? local_sample(source_length, plan)
                                              : global_sample(source_length, plan);
}

}  // namespace rvos
