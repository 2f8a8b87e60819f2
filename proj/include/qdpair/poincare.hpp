#pragma once
// Polarization bases and projectors.  States live on the Poincare sphere as
// P(theta, phi) = cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>, so
// H=(0,0), V=(pi,0), D=(pi/2,0), A=(pi/2,pi), R=(pi/2,3pi/2), L=(pi/2,pi/2),
// i.e. |R> = (|H> - i|V>)/sqrt2 and |L> = (|H> + i|V>)/sqrt2.

#include "qdpair/linalg.hpp"

namespace qdp {

enum class Pol : int { H = 0, V = 1, D = 2, A = 3, R = 4, L = 5 };

constexpr int kNumPol = 6;

struct PoincareCoord {
    double theta = 0.0;  // polar angle, radians
    double phi = 0.0;    // azimuth, radians
};

// Canonical sphere coordinates of the six measurement states (phi = 0 for the
// poles, where the azimuth is degenerate).
PoincareCoord basis_coords(Pol p);

// The orthogonal partner: H<->V, D<->A, R<->L.
Pol orthogonal(Pol p);

// Which of the three analyzer settings (H, D or R) a state belongs to.
Pol setting_of(Pol p);

char pol_label(Pol p);
Pol parse_pol(char label);  // throws std::invalid_argument on anything else

// Jones vector (aH, aV) of a sphere point; unit norm by construction.
Vec2 ket(const PoincareCoord& c);
inline Vec2 ket(Pol p) { return ket(basis_coords(p)); }

// Rank-one projector onto the two-photon product state |P1, P2><P1, P2|,
// first slot = first-emitted photon of the pair.
Mat4 pair_projector(const PoincareCoord& c1, const PoincareCoord& c2);
inline Mat4 pair_projector(Pol p1, Pol p2) {
    return pair_projector(basis_coords(p1), basis_coords(p2));
}

}  // namespace qdp
