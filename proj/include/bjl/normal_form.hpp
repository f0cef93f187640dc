#ifndef BJL_NORMAL_FORM_HPP
#define BJL_NORMAL_FORM_HPP

#include <vector>

#include "bjl/orbits.hpp"

namespace bjl {

// Saddle normal form T(xi, eta) = (D(xi eta) xi, D(xi eta)^{-1} eta) with
// D(w) = lambda + sum a_k w^k, computed by a formal polynomial conjugation
// degree by degree. The input jet must preserve the standard area form; the
// billiard wrapper first passes to (s, -cos(phi)) coordinates where the
// billiard map is exactly area preserving.
struct BirkhoffNormalForm {
    double lambda = 0;
    std::vector<double> a;          // a_1 .. a_K
    double conjugacy_residual = 0;  // max coefficient of H o F - T o H through degree 2K+1
};

BirkhoffNormalForm birkhoff_normal_form_from_jet(const JetMap2& jet, int K);

BirkhoffNormalForm birkhoff_normal_form(const Domain& domain, const PeriodicOrbit& orbit, int K);

// Conjugation of a map jet by (s, phi) -> (s, -cos(phi)) so that the area
// form becomes the standard one.
JetMap2 mirror_coordinates_jet(const JetMap2& jet);

}  // namespace bjl

#endif
