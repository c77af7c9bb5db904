#include "rvos/morphology.hpp"

namespace rvos {

namespace {

Mask step(const Mask& m, bool grow) {
  const Eigen::Index h = m.rows(), w = m.cols();
  Mask out = m;
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      const auto at = [&](Eigen::Index rr, Eigen::Index cc) -> std::uint8_t {
        return rr < 0 || cc < 0 || rr >= h || cc >= w ? 0 : m(rr, cc);
      };
      const std::uint8_t n = at(r - 1, c), s = at(r + 1, c), e = at(r, c + 1), west = at(r, c - 1);
      if (grow)
        out(r, c) = m(r, c) | n | s | e | west;
      else
        out(r, c) = m(r, c) & n & s & e & west;
    }
  return out;
}

}  // namespace

Mask dilate(const Mask& m, int radius) {
  Mask out = m;
  for (int i = 0; i < radius; ++i) out = step(out, true);
  return out;
}

Mask erode(const Mask& m, int radius) {
  Mask out = m;
  for (int i = 0; i < radius; ++i) out = step(out, false);
  return out;
}

Mask boundary(const Mask& m) {
  const Mask inner = erode(m, 1);
  Mask out = m;
  for (Eigen::Index i = 0; i < m.size(); ++i) out.data()[i] = m.data()[i] && !inner.data()[i];
  return out;
}

}  // namespace rvos
