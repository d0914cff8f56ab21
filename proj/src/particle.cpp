#include "nvtrap/particle.hpp"

#include <cmath>

#include <fmt/format.h>

#include "nvtrap/constants.hpp"
#include "nvtrap/error.hpp"

namespace nvtrap {

ParticleState ParticleState::from_diameter(double diameter_m, double density_kg_m3,
                                           double charge_c) {
    ParticleState p;
    p.diameter_m = diameter_m;
    p.density_kg_m3 = density_kg_m3;
    p.mass_kg = density_kg_m3 * constants::pi / 6.0 * diameter_m * diameter_m * diameter_m;
    p.charge_c = charge_c;
    return p;
}

double ParticleState::surface_area_m2() const {
    return constants::pi * diameter_m * diameter_m;
}

double ParticleState::charge_to_mass() const {
    return std::abs(charge_c) / mass_kg;
}

void ParticleState::validate() const {
    if (!(mass_kg > 0.0) || !(diameter_m > 0.0) || !(density_kg_m3 > 0.0))
        throw InvalidArgument("particle mass, diameter and density must be positive");
    const double expected = density_kg_m3 * constants::pi / 6.0 * std::pow(diameter_m, 3);
    if (std::abs(mass_kg - expected) > 1e-9 * expected)
        throw InvalidArgument(fmt::format(
            "particle mass {} kg inconsistent with diameter and density ({} kg)", mass_kg,
            expected));
    if (!position_m.allFinite() || !velocity_m_s.allFinite())
        throw InvalidArgument("particle position/velocity must be finite");
}

}  // namespace nvtrap
