#include "rvos/rle.hpp"

#include <charconv>
#include <sstream>

#include "rvos/errors.hpp"

namespace rvos {

std::string encode_mask(const Mask& mask) {
  if (!is_binary(mask)) throw DomainError("encode_mask: mask is not binary");
  std::ostringstream out;
  std::uint8_t current = 0;
  long long run = 0;
  bool first = true;
  auto emit = [&](long long n) {
    if (!first) out << ' ';
    out << n;
    first = false;
  };
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const std::uint8_t v = mask.data()[i];
    if (v != current) {
      emit(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  emit(run);
  return out.str();
}

Mask decode_mask(const std::string& encoded, int height, int width) {
  if (height < 0 || width < 0) throw DecodeError("decode_mask: negative shape");
  const long long total = static_cast<long long>(height) * width;
  Mask mask(height, width);
  long long at = 0;
  std::uint8_t value = 0;
  const char* p = encoded.data();
  const char* end = p + encoded.size();
  bool any = false;
  while (p < end) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p == end) break;
    long long n = 0;
    auto [next, ec] = std::from_chars(p, end, n);
    if (ec != std::errc() || n < 0 || (next < end && !std::isspace(static_cast<unsigned char>(*next))))
      throw DecodeError("decode_mask: malformed run length near offset " + std::to_string(p - encoded.data()));
    if (at + n > total)
      throw DecodeError("decode_mask: runs exceed " + std::to_string(height) + "x" + std::to_string(width));
    for (long long i = 0; i < n; ++i) mask.data()[at + i] = value;
    at += n;
    value ^= 1;
    p = next;
    any = true;
  }
  if (!any) throw DecodeError("decode_mask: empty encoding");
  if (at != total)
    throw DecodeError("decode_mask: runs sum to " + std::to_string(at) + ", expected " + std::to_string(total));
  return mask;
}

}  // namespace rvos
