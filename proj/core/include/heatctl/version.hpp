#pragma once

namespace heatctl {

// Stamped into every manifest; keep in lockstep with the CMake project version.
inline constexpr const char* kArtifactVersion = "0.1.0";

} // namespace heatctl
