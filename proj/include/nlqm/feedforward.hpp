#pragma once

#include <cmath>

namespace nlqm {

/// theta(q) = arctan(sqrt(2) gamma q), the second homodyne's rotation away from p.
inline double feedforward_angle(double q, double gamma) { return std::atan(std::sqrt(2.0) * gamma * q); }

/// g(q) = sqrt(2)/cos(theta(q)) = sqrt(2 (1 + 2 gamma^2 q^2)).
inline double feedforward_gain(double q, double gamma) {
    return std::sqrt(2.0 * (1.0 + 2.0 * gamma * gamma * q * q));
}

}  // namespace nlqm
