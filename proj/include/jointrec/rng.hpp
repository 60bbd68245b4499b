#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace jointrec {

/** SplitMix64 step (Steele, Lea, Flood); used to derive independent
 *  sub-seeds from one instance seed. */
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/** Standard normal draws from a seeded mt19937_64 via the Box-Muller
 *  transform. The uniform mapping and the transform are spelled out here so
 *  streams are bit-reproducible across platforms, which
 *  std::normal_distribution does not guarantee.
 */
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace jointrec
