#ifndef NVTRAP_PARTICLE_HPP
#define NVTRAP_PARTICLE_HPP

#include <Eigen/Dense>

namespace nvtrap {

using Vec3 = Eigen::Vector3d;

// Charged micro-diamond, SI units. Charge is taken as positive in every
// formula (|Q|); the sign is kept only for bookkeeping.
struct ParticleState {
    double mass_kg = 0.0;
    double charge_c = 0.0;
    double diameter_m = 0.0;
    double density_kg_m3 = 0.0;
    Vec3 position_m = Vec3::Zero();
    Vec3 velocity_m_s = Vec3::Zero();

    // Sphere of the given diameter and density; mass = rho (pi/6) d^3.
    static ParticleState from_diameter(double diameter_m, double density_kg_m3, double charge_c);

    double radius_m() const { return 0.5 * diameter_m; }
    // Sphere surface pi d^2. Real diamonds are irregular; this is the
    // approximation used by every heat-transfer formula here.
    double surface_area_m2() const;
    double charge_to_mass() const;

    // Positive diameter/density/mass, mass consistent with diameter and
    // density to 1e-9 relative when both are given, finite kinematics.
    void validate() const;
};

}  // namespace nvtrap

#endif
