#pragma once

#include <array>
#include <string>
#include <vector>

#include "starfl/common.hpp"

namespace starfl {

enum class Phase { e = 0, u = 1, d = 2 };
enum class Side { t = 0, r = 1 };
enum class Mode { ES, TS, CONV };
enum class Scenario { ES_ES, ES_TS, TS_ES, TS_TS, CONV };

inline constexpr std::array<Phase, 3> kPhases{Phase::e, Phase::u, Phase::d};
inline constexpr std::array<Scenario, 5> kScenarios{Scenario::TS_TS, Scenario::TS_ES, Scenario::ES_TS, Scenario::ES_ES,
                                                    Scenario::CONV};

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::e: return "e";
        case Phase::u: return "u";
        default: return "d";
    }
}

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::ES: return "ES";
        case Mode::TS: return "TS";
        default: return "CONV";
    }
}

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::ES_ES: return "ES-ES";
        case Scenario::ES_TS: return "ES-TS";
        case Scenario::TS_ES: return "TS-ES";
        case Scenario::TS_TS: return "TS-TS";
        default: return "CONV";
    }
}

inline Scenario parse_scenario(const std::string& s) {
    for (Scenario sc : kScenarios)
        if (s == to_string(sc)) return sc;
    throw InvalidArgument("unknown scenario '" + s + "' (expected ES-ES, ES-TS, TS-ES, TS-TS or CONV)");
}

/// STAR-RIS mode used in the uplink and downlink of a scenario. The energy
/// phase always uses ES (CONV uses the conventional mask everywhere).
inline Mode uplink_mode(Scenario s) {
    switch (s) {
        case Scenario::ES_ES:
        case Scenario::ES_TS: return Mode::ES;
        case Scenario::CONV: return Mode::CONV;
        default: return Mode::TS;
    }
}

inline Mode downlink_mode(Scenario s) {
    switch (s) {
        case Scenario::ES_ES:
        case Scenario::TS_ES: return Mode::ES;
        case Scenario::CONV: return Mode::CONV;
        default: return Mode::TS;
    }
}

/// Transmission / reflection phase-shift vectors of one phase.
struct PhaseProfile {
    CVec t;
    CVec r;
    Mode mode = Mode::ES;

    const CVec& side(Side s) const { return s == Side::t ? t : r; }
    CVec& side(Side s) { return s == Side::t ? t : r; }
};

struct StarProfile {
    std::array<PhaseProfile, 3> phase;
    PhaseProfile& operator[](Phase p) { return phase[static_cast<int>(p)]; }
    const PhaseProfile& operator[](Phase p) const { return phase[static_cast<int>(p)]; }
};

/// Per-phase AP beamforming matrices, M x K, one column per user.
struct BeamformingSet {
    std::array<CMat, 3> V;
    CMat& operator[](Phase p) { return V[static_cast<int>(p)]; }
    const CMat& operator[](Phase p) const { return V[static_cast<int>(p)]; }
};

/// Number of elements that reflect only in the conventional-RIS layout.
inline int conv_reflect_count(int n) { return (n + 1) / 2; }

}  // namespace starfl
