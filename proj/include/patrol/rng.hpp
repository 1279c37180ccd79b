#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace patrol {

/// Seeded random stream. Distribution code is written out here rather than
/// taken from <random> so that draws are identical across standard libraries.
class Rng {
  public:
    Rng() = default;
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool coin() { return (engine_() >> 63) != 0; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::string state() const;
    void set_state(const std::string& text);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace patrol
