#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tangram {

// Minimal 8-bit grayscale PNG encoder (deterministic bytes for fixed input).
// `pixels` is row-major, size width*height, 0 = black, 255 = white.
std::string encode_gray_png(const std::vector<std::uint8_t>& pixels, int width, int height);

} // namespace tangram
