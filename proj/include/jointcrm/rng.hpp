#pragma once

#include <cstdint>
#include <random>

namespace jcrm {

/// Deterministic random stream identified by (seed, streamIndex).
///
/// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
/// are fully specified by the standard, and normals are produced by inverse
/// transform with normal_quantile, so draws are identical on every platform
/// and independent of thread scheduling.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t streamIndex);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_; }

    /// Uniform on the open interval (0,1), 53-bit resolution.
    double uniform();
    /// Standard normal draw.
    double normal();
    std::uint64_t next_u64() { return engine_(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

/// Packs hierarchical coordinates (e.g. scenario, replication, patient) into
/// a single stream index. Each coordinate must fit its bit budget.
std::uint64_t stream_key(std::uint64_t major, std::uint64_t middle, std::uint64_t minor);

}  // namespace jcrm
