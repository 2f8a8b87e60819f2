#pragma once
// Time-tag level Monte Carlo of the pulsed cascade experiment.  Each pulse may
// prepare a biexciton; its two photons decay with exponential delays, pick up
// Gaussian detector jitter, pass a polarization projection (transmit/reflect
// ports per arm) and are recorded as integer-picosecond time tags alongside a
// SYNC tag per pulse and optional dark counts.

#include <cstdint>
#include <string>
#include <vector>

#include "qdpair/cascade_model.hpp"
#include "qdpair/poincare.hpp"

namespace qdp {

enum class Channel : std::uint8_t { XX_T = 0, XX_R = 1, X_T = 2, X_R = 3, SYNC = 4 };

char const* channel_name(Channel c);
Channel parse_channel(const std::string& name);

struct TimeTag {
    std::int64_t t_ps;
    Channel channel;

    friend bool operator<(const TimeTag& a, const TimeTag& b) {
        return a.t_ps != b.t_ps ? a.t_ps < b.t_ps
                                : static_cast<int>(a.channel) < static_cast<int>(b.channel);
    }
    friend bool operator==(const TimeTag& a, const TimeTag& b) {
        return a.t_ps == b.t_ps && a.channel == b.channel;
    }
};

using TimeTagStream = std::vector<TimeTag>;

struct DetectionConfig {
    double rep_period_ps = 13157.9;    // 76 MHz
    std::uint64_t n_pulses = 1000000;
    double prep_prob = 1.0;            // per-pulse biexciton preparation probability
    double eta_xx = 0.1;               // detection efficiency, biexciton arm
    double eta_x = 0.1;                // detection efficiency, exciton arm
    double dark_rate_hz = 0.0;         // per detector
    double projection_accuracy = 1.0;  // outcome kept with this probability, else coin
    // Photon-weighted multiphoton fraction (= 1 - single-photon purity): the
    // probability that an emitted photon shares its pulse with a second pair.
    // The per-pulse second-cascade probability is f/(2-f), which makes the
    // pulsed HBT g2(0) come out at ~f.
    double two_photon_prob = 0.0;
    Pol basis_first = Pol::H;          // analyzer setting, biexciton arm
    Pol basis_second = Pol::H;         // analyzer setting, exciton arm
    std::uint64_t seed = 1;

    void validate() const;
};

// Per-pulse Born probabilities of the four projection outcomes
// (T,T), (T,R), (R,T), (R,R) for analyzer states (basis1, basis2) at
// emission-time difference delta_tau.  Sums to 1.
std::array<double, 4> born_probabilities(double delta_tau_ps, const CascadeParams& p,
                                         Pol basis1, Pol basis2);

// Generate the sorted time-tag stream.  simulate() parallelizes over pulse
// blocks with OpenMP; simulate_serial() is the single-threaded reference.
// Both produce identical streams for identical inputs (counter-based RNG keyed
// by pulse index; final order = (timestamp, channel), whose ties are between
// byte-identical records).
TimeTagStream simulate(const CascadeParams& p, const DetectionConfig& d);
TimeTagStream simulate_serial(const CascadeParams& p, const DetectionConfig& d);

}  // namespace qdp
