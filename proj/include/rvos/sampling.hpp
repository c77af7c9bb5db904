#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rvos {

enum class SamplingMethod { local, global };

std::string to_string(SamplingMethod m);
SamplingMethod parse_sampling_method(const std::string& s);

struct SamplingPlan {
  SamplingMethod method = SamplingMethod::global;
  int num_frames = 5;
  std::uint64_t seed = 0;
};

/// One frame drawn uniformly from each segment [floor(i*L/T), floor((i+1)*L/T)).
/// When L < T the full range is returned, padded by repeating the last index.
std::vector<int> global_sample(int source_length, const SamplingPlan& plan);

/// T consecutive frames around a uniformly drawn center, clamped to [0, L).
std::vector<int> local_sample(int source_length, const SamplingPlan& plan);

/// Dispatches on plan.method.
std::vector<int> sample_frames(int source_length, const SamplingPlan& plan);

}  // namespace rvos
