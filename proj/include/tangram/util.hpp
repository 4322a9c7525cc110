#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace tangram {

std::string read_file(const std::filesystem::path& path);

// Write-to-temp-then-rename so concurrent writers never interleave bytes.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// FNV-1a over bytes, used to derive deterministic per-scene RNG streams.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic stream key for (run seed, scene id, lane, iteration).
std::uint64_t stream_seed(std::uint64_t seed, std::string_view scene_id,
                          std::uint64_t lane = 0, std::uint64_t iteration = 0);

// Kahan-compensated accumulator; keeps fold results stable to ~1e-12
// regardless of how record batches were produced.
class KahanSum {
public:
    void add(double v);
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::string format_double(double v, int decimals);
double round_decimals(double v, int decimals);

std::string base64_encode(std::string_view bytes);

} // namespace tangram
