#include "qdpair/hyperspectral.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qdp {
namespace {

constexpr char kCubeMagic[8] = {'Q', 'D', 'H', 'C', '1', '\0', '\0', '\0'};

void check_increasing(const std::vector<double>& v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string("cube: empty ") + name + " grid");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            throw std::invalid_argument(std::string("cube: ") + name +
                                        " grid must be strictly increasing");
}

// edges of bin i for a center grid; end bins mirror the adjacent spacing
std::pair<double, double> bin_edges(const std::vector<double>& centers, std::size_t i) {
    const std::size_t n = centers.size();
    if (n == 1) return {centers[0], centers[0]};  // degenerate, handled by caller
    const double lo = i == 0 ? centers[0] - 0.5 * (centers[1] - centers[0])
                             : 0.5 * (centers[i - 1] + centers[i]);
    const double hi = i == n - 1 ? centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2])
                                 : 0.5 * (centers[i] + centers[i + 1]);
    return {lo, hi};
}

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("cube file truncated");
    return v;
}

}  // namespace

void HyperspectralCube::validate() const {
    check_increasing(x_um, "x");
    check_increasing(y_um, "y");
    check_increasing(lambda_nm, "lambda");
    if (counts.size() != nx() * ny() * nl())
        throw std::invalid_argument("cube: counts size does not match the grids");
}

FocalMap band_integrate(const HyperspectralCube& cube, double lo_nm, double hi_nm) {
    cube.validate();
    if (!(lo_nm < hi_nm)) throw std::invalid_argument("band_integrate: need lo < hi");

    const std::size_t nl = cube.nl();
    std::vector<double> weight(nl, 0.0);
    double total_weight = 0.0;
    if (nl == 1) {
        // single spectral bin: in or out, no meaningful width
        weight[0] = (cube.lambda_nm[0] >= lo_nm && cube.lambda_nm[0] <= hi_nm) ? 1.0 : 0.0;
        total_weight = weight[0];
    } else {
        for (std::size_t il = 0; il < nl; ++il) {
            const auto [blo, bhi] = bin_edges(cube.lambda_nm, il);
            const double ov = std::min(bhi, hi_nm) - std::max(blo, lo_nm);
            if (ov > 0.0) {
                weight[il] = ov / (bhi - blo);
                total_weight += weight[il];
            }
        }
    }
    if (total_weight == 0.0)
        throw std::invalid_argument("band_integrate: band does not overlap the spectral range");

    FocalMap map;
    map.x_um = cube.x_um;
    map.y_um = cube.y_um;
    map.value.assign(cube.nx() * cube.ny(), 0.0);
    for (std::size_t ix = 0; ix < cube.nx(); ++ix)
        for (std::size_t iy = 0; iy < cube.ny(); ++iy) {
            double s = 0.0;
            for (std::size_t il = 0; il < nl; ++il)
                if (weight[il] > 0.0) s += weight[il] * double(cube.at(ix, iy, il));
            map.value[iy * cube.nx() + ix] = s;
        }
    return map;
}

void write_cube(const std::string& path, const HyperspectralCube& cube) {
    cube.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_cube: cannot open " + path);
    os.write(kCubeMagic, sizeof(kCubeMagic));
    put(os, std::uint64_t(cube.nx()));
    put(os, std::uint64_t(cube.ny()));
    put(os, std::uint64_t(cube.nl()));
    for (double v : cube.x_um) put(os, v);
    for (double v : cube.y_um) put(os, v);
    for (double v : cube.lambda_nm) put(os, v);
    os.write(reinterpret_cast<const char*>(cube.counts.data()),
             std::streamsize(cube.counts.size() * sizeof(std::uint32_t)));
    if (!os) throw std::runtime_error("write_cube: write failed for " + path);
}

HyperspectralCube read_cube(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_cube: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCubeMagic, sizeof(magic)) != 0)
        throw std::runtime_error("read_cube: bad magic in " + path);

    HyperspectralCube cube;
    const auto nx = get<std::uint64_t>(is);
    const auto ny = get<std::uint64_t>(is);
    const auto nl = get<std::uint64_t>(is);
    if (nx == 0 || ny == 0 || nl == 0 || nx * ny * nl > (1ull << 32))
        throw std::runtime_error("read_cube: implausible dimensions in " + path);
    cube.x_um.resize(nx);
    cube.y_um.resize(ny);
    cube.lambda_nm.resize(nl);
    for (auto& v : cube.x_um) v = get<double>(is);
    for (auto& v : cube.y_um) v = get<double>(is);
    for (auto& v : cube.lambda_nm) v = get<double>(is);
    cube.counts.resize(nx * ny * nl);
    is.read(reinterpret_cast<char*>(cube.counts.data()),
            std::streamsize(cube.counts.size() * sizeof(std::uint32_t)));
    if (!is) throw std::runtime_error("read_cube: truncated counts in " + path);
    cube.validate();
    return cube;
}

}  // namespace qdp
