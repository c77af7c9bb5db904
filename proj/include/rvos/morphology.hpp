#pragma once

#include "rvos/tensor.hpp"

namespace rvos {

/// Binary dilation/erosion by a 4-connected cross, repeated `radius` times.
/// Pixels outside the image count as background.
Mask dilate(const Mask& m, int radius);
Mask erode(const Mask& m, int radius);

/// Foreground pixels with a 4-neighbour that is background or off-image.
Mask boundary(const Mask& m);

}  // namespace rvos
