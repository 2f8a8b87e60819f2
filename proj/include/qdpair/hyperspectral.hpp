#pragma once
// Hyperspectral scan cube: photon counts on a (x, y) piezo grid resolved by
// wavelength.  Band integration collapses the spectral axis into a focal-plane
// map, with boundary spectral bins weighted by their overlap with the band.

#include <cstdint>
#include <string>
#include <vector>

#include "qdpair/fitters.hpp"

namespace qdp {

struct HyperspectralCube {
    std::vector<double> x_um;       // strictly increasing
    std::vector<double> y_um;       // strictly increasing
    std::vector<double> lambda_nm;  // strictly increasing bin centers
    std::vector<std::uint32_t> counts;  // [(ix * ny + iy) * nl + il]

    std::size_t nx() const { return x_um.size(); }
    std::size_t ny() const { return y_um.size(); }
    std::size_t nl() const { return lambda_nm.size(); }

    std::uint32_t at(std::size_t ix, std::size_t iy, std::size_t il) const {
        return counts[(ix * ny() + iy) * nl() + il];
    }
    std::uint32_t& at(std::size_t ix, std::size_t iy, std::size_t il) {
        return counts[(ix * ny() + iy) * nl() + il];
    }

    // Throws std::invalid_argument on non-increasing grids or a counts array
    // that does not match nx * ny * nl.
    void validate() const;
};

// Sum counts per pixel over wavelengths in [lo_nm, hi_nm].  Spectral bins are
// centered on lambda_nm with edges at neighbor midpoints (end bins extend by
// half the adjacent spacing); bins cut by the band boundary contribute their
// overlap fraction.  Throws when the band misses the spectral range entirely.
FocalMap band_integrate(const HyperspectralCube& cube, double lo_nm, double hi_nm);

// Self-describing binary cube file: 8-byte magic "QDHC1\0\0\0", then nx, ny,
// nl as little-endian u64, the three axes as f64, then counts as u32 in the
// in-memory order.  Throws std::runtime_error on I/O or format errors.
void write_cube(const std::string& path, const HyperspectralCube& cube);
HyperspectralCube read_cube(const std::string& path);

}  // namespace qdp
