#pragma once

#include <string>

#include "wallchain/core_model.hpp"

namespace wallchain {

enum class PulseShape {
    gaussian,    // A exp(-u^2/2), u = (x-c)/width, cut to zero for |u| > 8
    bump,        // A (1-u^2)^4 on |u| < 1, C^3 with compact support
    wavepacket,  // gaussian envelope times cos(k (x-c) + phase)
};

/// How the velocity field is tied to the pressure profile f.
enum class Linkage {
    right_moving,   // p0 = f, v0 = f/(a rho0)
    left_moving,    // p0 = f, v0 = -f/(a rho0)
    pressure_only,  // p0 = f, v0 = 0
    velocity_only,  // p0 = 0, v0 = f/(a rho0)
};

struct Pulse {
    PulseShape shape = PulseShape::gaussian;
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
    double wavenumber = 0.0;  // wavepacket carrier, rad/m
    double phase = 0.0;

    static constexpr double gaussian_cutoff = 8.0;

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
    double support_lo() const;
    double support_hi() const;
    void validate() const;
};

struct InitialData {
    Pulse pulse;
    Linkage linkage = Linkage::right_moving;

    double p0(double x, const MediumParams&) const { return p_weight() * pulse.value(x); }
    double v0(double x, const MediumParams& m) const {
        return v_weight() * pulse.value(x) / m.impedance();
    }
    double dp0(double x, const MediumParams&) const { return p_weight() * pulse.d1(x); }
    double dv0(double x, const MediumParams& m) const {
        return v_weight() * pulse.d1(x) / m.impedance();
    }
    double d2p0(double x, const MediumParams&) const { return p_weight() * pulse.d2(x); }
    double d2v0(double x, const MediumParams& m) const {
        return v_weight() * pulse.d2(x) / m.impedance();
    }

    double p_weight() const { return linkage == Linkage::velocity_only ? 0.0 : 1.0; }
    double v_weight() const {
        switch (linkage) {
            case Linkage::right_moving: return 1.0;
            case Linkage::left_moving: return -1.0;
            case Linkage::pressure_only: return 0.0;
            case Linkage::velocity_only: return 1.0;
        }
        return 0.0;
    }
    bool is_zero() const { return pulse.amplitude == 0.0; }
};

std::string to_string(PulseShape s);
std::string to_string(Linkage l);
PulseShape parse_pulse_shape(const std::string& s);
Linkage parse_linkage(const std::string& s);

}  // namespace wallchain
