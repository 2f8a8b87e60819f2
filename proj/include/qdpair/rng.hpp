#pragma once
// Counter-based splittable RNG (Philox-4x32-10).  Each pulse of the simulation
// owns an independent stream keyed by (seed, pulse_index), so event generation
// can be farmed out to threads in any order and still reproduce the serial
// run bit for bit.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qdp {

class PulseRng {
  public:
    PulseRng(std::uint64_t seed, std::uint64_t pulse_index)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr0_(static_cast<std::uint32_t>(pulse_index)),
          ctr1_(static_cast<std::uint32_t>(pulse_index >> 32)) {}

    std::uint32_t next_u32() {
        if (have_ == 0) refill();
        return buf_[--have_];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // uniform in (0, 1]; safe under log()
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double mean) { return -mean * std::log(uniform_pos()); }

    double gaussian() {
        // Box-Muller, one value per call: a fixed two-draw cost keeps the
        // per-pulse draw sequence trivially deterministic.
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

    // Poisson sample; Knuth's product method for small mean, rounded-Gaussian
    // approximation above 64 (dark-count windows in practice sit near 0).
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 64.0) {
            const double v = mean + std::sqrt(mean) * gaussian();
            return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
        }
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform_pos();
        while (prod > limit) {
            ++k;
            prod *= uniform_pos();
        }
        return k;
    }

  private:
    void refill() {
        std::uint32_t c0 = ctr0_, c1 = ctr1_, c2 = blk_lo_, c3 = blk_hi_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c0;
            const std::uint64_t p1 = 0xCD9E8D57ull * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        buf_[0] = c0;
        buf_[1] = c1;
        buf_[2] = c2;
        buf_[3] = c3;
        have_ = 4;
        if (++blk_lo_ == 0) ++blk_hi_;
    }

    std::uint32_t key0_, key1_;
    std::uint32_t ctr0_, ctr1_;          // pulse index
    std::uint32_t blk_lo_ = 0, blk_hi_ = 0;  // block counter within the pulse
    std::uint32_t buf_[4]{};
    int have_ = 0;
};

}  // namespace qdp
