#pragma once

// Randomized fixtures shared by the invariant suites: chains snapped onto a
// grid and states that lie in the domain of the generator.

#include <cstddef>
#include <random>

#include "wallchain/core_model.hpp"

namespace wallchain {

struct ChainSetup {
    OscillatorChain chain;  // snapped
    WallGrid mesh;
};

/// n walls in [-L/2, L/2] on a grid over [-L, L]. Masses and stiffnesses are
/// drawn from [0.5, 2]. With fixed_positions the walls sit at
/// -L/2 + L (j+1)/(n+1) so the geometry is independent of dx.
ChainSetup random_chain_setup(std::size_t n, double L, double dx, const MediumParams& medium,
                              std::mt19937_64& rng, bool fixed_positions = false);

/// Smooth fields times a window vanishing at the grid edges; p jumps by a
/// random amount at every wall, v is continuous and z_j = v(s_j). The
/// random parameters do not depend on dx, so a fixed seed gives the same
/// continuum state on every grid.
PhysicalState random_compatible_state(const ChainSetup& setup, const MediumParams& medium,
                                      std::mt19937_64& rng);

/// |<<P1, A P2>> + <<A P1, P2>>| / (||P1|| ||P2||).
double skew_defect(const PhysicalState& psi1, const PhysicalState& psi2,
                   const MediumParams& medium, const OscillatorChain& chain);

}  // namespace wallchain
