#include "tangram/png.hpp"

#include <zlib.h>

#include <stdexcept>

namespace tangram {

namespace {

void append_u32_be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& data) {
    append_u32_be(out, static_cast<std::uint32_t>(data.size()));
    const size_t start = out.size();
    out.append(type, 4);
    out.append(data);
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data() + start),
                static_cast<uInt>(out.size() - start));
    append_u32_be(out, static_cast<std::uint32_t>(crc));
}

} // namespace

std::string encode_gray_png(const std::vector<std::uint8_t>& pixels, int width, int height) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height)) {
        throw std::invalid_argument("pixel buffer does not match image dimensions");
    }

    // Scanlines with filter byte 0 prepended.
    std::string raw;
    raw.reserve(static_cast<size_t>(height) * (width + 1));
    for (int row = 0; row < height; ++row) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char*>(pixels.data() + static_cast<size_t>(row) * width),
                   static_cast<size_t>(width));
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK) {
        throw std::runtime_error("zlib compression failed");
    }
    compressed.resize(bound);

    std::string out;
    out.append("\x89PNG\r\n\x1a\n", 8);

    std::string ihdr;
    append_u32_be(ihdr, static_cast<std::uint32_t>(width));
    append_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);    // bit depth
    ihdr.push_back(0);    // grayscale
    ihdr.push_back(0);    // deflate
    ihdr.push_back(0);    // adaptive filtering
    ihdr.push_back(0);    // no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", "");
    return out;
}

} // namespace tangram
