#pragma once

#include <vector>

namespace rvos {

/// Widths and counts of the toy model. C (channels) is shared by every
/// attention stage; each backbone level j has its own stride and width.
struct ModelDims {
  int channels = 16;
  int heads = 2;
  int queries = 4;
  int decoder_layers = 2;
  int self_layers = 1;  // self-attention sublayers inside the instance-query block
  int vocab_size = 0;   // 0 means "use the synthetic vocabulary"
  std::vector<int> level_strides = {4, 8, 16};
  std::vector<int> level_channels = {16, 16, 16};

  int num_levels() const { return static_cast<int>(level_strides.size()); }
  /// Patch size of backbone stage j (stride_j / stride_{j-1}).
  int stage_kernel(int level) const;
  int resolved_vocab_size() const;

  /// Throws ValidationError on inconsistent dims.
  void validate() const;
};

}  // namespace rvos
