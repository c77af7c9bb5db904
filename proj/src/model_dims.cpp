#include "rvos/model_dims.hpp"

#include <string>

#include "rvos/errors.hpp"
#include "rvos/vocabulary.hpp"

namespace rvos {

int ModelDims::stage_kernel(int level) const {
  const int prev = level == 0 ? 1 : level_strides[static_cast<std::size_t>(level - 1)];
  return level_strides[static_cast<std::size_t>(level)] / prev;
}

int ModelDims::resolved_vocab_size() const {
  return vocab_size > 0 ? vocab_size : Vocabulary::synthetic().size();
}

void ModelDims::validate() const {
  if (channels <= 0 || heads <= 0 || queries <= 0 || decoder_layers < 0 || self_layers < 0)
    throw ValidationError("model dims must be positive");
  if (channels % heads != 0)
    throw ValidationError("model.channels (" + std::to_string(channels) + ") not divisible by model.heads (" +
                          std::to_string(heads) + ")");
  if (level_strides.empty() || level_strides.size() != level_channels.size())
    throw ValidationError("model.level_strides and model.level_channels must be non-empty and equal length");
  int prev = 1;
  for (std::size_t j = 0; j < level_strides.size(); ++j) {
    if (level_strides[j] <= prev || level_strides[j] % prev != 0)
      throw ValidationError("model.level_strides must be increasing multiples of each other");
    if (level_channels[j] <= 0) throw ValidationError("model.level_channels must be positive");
    prev = level_strides[j];
  }
}

}  // namespace rvos
