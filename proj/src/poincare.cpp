#include "qdpair/poincare.hpp"

#include <numbers>

namespace qdp {

namespace {
constexpr double pi = std::numbers::pi;
}

PoincareCoord basis_coords(Pol p) {
    switch (p) {
        case Pol::H: return {0.0, 0.0};
        case Pol::V: return {pi, 0.0};
        case Pol::D: return {pi / 2, 0.0};
        case Pol::A: return {pi / 2, pi};
        case Pol::R: return {pi / 2, 3 * pi / 2};
        case Pol::L: return {pi / 2, pi / 2};
    }
    throw std::invalid_argument("basis_coords: bad Pol");
}

Pol orthogonal(Pol p) {
    switch (p) {
        case Pol::H: return Pol::V;
        case Pol::V: return Pol::H;
        case Pol::D: return Pol::A;
        case Pol::A: return Pol::D;
        case Pol::R: return Pol::L;
        case Pol::L: return Pol::R;
    }
    throw std::invalid_argument("orthogonal: bad Pol");
}

Pol setting_of(Pol p) {
    switch (p) {
        case Pol::H: case Pol::V: return Pol::H;
        case Pol::D: case Pol::A: return Pol::D;
        case Pol::R: case Pol::L: return Pol::R;
    }
    throw std::invalid_argument("setting_of: bad Pol");
}

char pol_label(Pol p) { return "HVDARL"[static_cast<int>(p)]; }

Pol parse_pol(char label) {
    switch (label) {
        case 'H': return Pol::H;
        case 'V': return Pol::V;
        case 'D': return Pol::D;
        case 'A': return Pol::A;
        case 'R': return Pol::R;
        case 'L': return Pol::L;
    }
    throw std::invalid_argument(std::string("parse_pol: unknown label '") + label + "'");
}

Vec2 ket(const PoincareCoord& c) {
    return {cplx(std::cos(c.theta / 2), 0.0),
            std::polar(std::sin(c.theta / 2), c.phi)};
}

Mat4 pair_projector(const PoincareCoord& c1, const PoincareCoord& c2) {
    return outer(kron(ket(c1), ket(c2)));
}

}  // namespace qdp
