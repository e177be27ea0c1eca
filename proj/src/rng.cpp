#include "jointcrm/rng.hpp"

#include "jointcrm/errors.hpp"
#include "jointcrm/normal.hpp"

namespace jcrm {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x6a09e667u};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t streamIndex)
    : seed_(seed), stream_(streamIndex), engine_(make_engine(seed, streamIndex)) {}

double RngStream::uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_quantile(uniform()); }

std::uint64_t stream_key(std::uint64_t major, std::uint64_t middle, std::uint64_t minor) {
    // 20 bits major, 28 bits middle, 16 bits minor.
    if (major >= (1ull << 20) || middle >= (1ull << 28) || minor >= (1ull << 16)) {
        throw DomainError("stream_key: coordinate out of range");
    }
    return (major << 44) | (middle << 16) | minor;
}

}  // namespace jcrm
