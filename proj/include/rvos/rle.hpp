#pragma once

#include <string>

#include "rvos/tensor.hpp"

namespace rvos {

// Run-length mask codec. Row-major pixel order; whitespace-separated run
// lengths alternating zero-run, one-run, ... and always starting with a
// zero-run (which may be 0). All-zeros 2x2 is "4", all-ones 2x2 is "0 4".

/// Throws DomainError for non-binary input.
std::string encode_mask(const Mask& mask);

/// Throws DecodeError on malformed input or when the counts do not sum to H*W.
Mask decode_mask(const std::string& encoded, int height, int width);

}  // namespace rvos
