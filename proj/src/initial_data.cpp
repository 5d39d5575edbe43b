#include "wallchain/initial_data.hpp"

#include <cmath>

namespace wallchain {

namespace {

double radius(const Pulse& p) {
    return p.shape == PulseShape::bump ? p.width : Pulse::gaussian_cutoff * p.width;
}

bool outside(const Pulse& p, double x) { return std::abs(x - p.center) >= radius(p); }

}  // namespace

void Pulse::validate() const {
    if (!(width > 0.0)) throw ConfigError("initial: width > 0 violated");
    if (!std::isfinite(amplitude)) throw ConfigError("initial: amplitude must be finite");
    if (shape == PulseShape::wavepacket && !(wavenumber > 0.0)) {
        throw ConfigError("initial: wavenumber > 0 violated for wavepacket");
    }
}

double Pulse::support_lo() const { return center - radius(*this); }
double Pulse::support_hi() const { return center + radius(*this); }

double Pulse::value(double x) const {
    if (amplitude == 0.0 || outside(*this, x)) return 0.0;
    const double u = (x - center) / width;
    switch (shape) {
        case PulseShape::gaussian: return amplitude * std::exp(-0.5 * u * u);
        case PulseShape::bump: {
            const double b = 1.0 - u * u;
            return amplitude * b * b * b * b;
        }
        case PulseShape::wavepacket:
            return amplitude * std::exp(-0.5 * u * u) * std::cos(wavenumber * (x - center) + phase);
    }
    return 0.0;
}

double Pulse::d1(double x) const {
    if (amplitude == 0.0 || outside(*this, x)) return 0.0;
    const double u = (x - center) / width;
    switch (shape) {
        case PulseShape::gaussian: return -amplitude * u / width * std::exp(-0.5 * u * u);
        case PulseShape::bump: {
            const double b = 1.0 - u * u;
            return amplitude * (-8.0 * u * b * b * b) / width;
        }
        case PulseShape::wavepacket: {
            const double e = std::exp(-0.5 * u * u);
            const double arg = wavenumber * (x - center) + phase;
            return amplitude * (-u / width * e * std::cos(arg) - wavenumber * e * std::sin(arg));
        }
    }
    return 0.0;
}

double Pulse::d2(double x) const {
    if (amplitude == 0.0 || outside(*this, x)) return 0.0;
    const double u = (x - center) / width;
    switch (shape) {
        case PulseShape::gaussian:
            return amplitude * (u * u - 1.0) / (width * width) * std::exp(-0.5 * u * u);
        case PulseShape::bump: {
            const double b = 1.0 - u * u;
            return amplitude * (-8.0 * b * b * b + 48.0 * u * u * b * b) / (width * width);
        }
        case PulseShape::wavepacket: {
            const double e = std::exp(-0.5 * u * u);
            const double de = -u / width * e;
            const double dde = (u * u - 1.0) / (width * width) * e;
            const double arg = wavenumber * (x - center) + phase;
            const double c = std::cos(arg), s = std::sin(arg);
            return amplitude * (dde * c - 2.0 * de * wavenumber * s - e * wavenumber * wavenumber * c);
        }
    }
    return 0.0;
}

std::string to_string(PulseShape s) {
    switch (s) {
        case PulseShape::gaussian: return "gaussian";
        case PulseShape::bump: return "bump";
        case PulseShape::wavepacket: return "wavepacket";
    }
    return "gaussian";
}

std::string to_string(Linkage l) {
    switch (l) {
        case Linkage::right_moving: return "right";
        case Linkage::left_moving: return "left";
        case Linkage::pressure_only: return "pressure";
        case Linkage::velocity_only: return "velocity";
    }
    return "right";
}

PulseShape parse_pulse_shape(const std::string& s) {
    if (s == "gaussian") return PulseShape::gaussian;
    if (s == "bump") return PulseShape::bump;
    if (s == "wavepacket") return PulseShape::wavepacket;
    throw ConfigError("initial.shape: unknown pulse shape '" + s + "'");
}

Linkage parse_linkage(const std::string& s) {
    if (s == "right") return Linkage::right_moving;
    if (s == "left") return Linkage::left_moving;
    if (s == "pressure") return Linkage::pressure_only;
    if (s == "velocity") return Linkage::velocity_only;
    throw ConfigError("initial.linkage: unknown linkage '" + s + "'");
}

}  // namespace wallchain
