#pragma once

#include <array>

namespace qppo {

// Raw environment observation. Cart Pole fills all four slots
// (x, v_cart, phi, v_pole); Frozen Lake stores its discrete state
// index in slot 0 and zeros elsewhere.
using Obs = std::array<double, 4>;

}  // namespace qppo
