#pragma once

#include <cmath>
#include <numbers>

namespace jpo {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact values.
inline constexpr double kPlanck = 6.62607015e-34;
inline constexpr double kHbar = kPlanck / kTwoPi;
inline constexpr double kElementaryCharge = 1.602176634e-19;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kResistanceQuantum = kPlanck / (kElementaryCharge * kElementaryCharge);

/// Cyclic frequency (Hz) to angular frequency (rad/s).
constexpr double angular(double hz) { return kTwoPi * hz; }

/// Angular frequency (rad/s) to cyclic frequency (Hz).
constexpr double cyclic(double rad_per_s) { return rad_per_s / kTwoPi; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace jpo
