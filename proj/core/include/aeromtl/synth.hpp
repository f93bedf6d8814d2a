#pragma once

#include <array>
#include <cstdint>

#include "aeromtl/raster.hpp"

namespace aeromtl {

/// Synthetic class ids in label order.
enum class SynthClass : std::int32_t { ground = 0, building = 1, tree = 2, road = 3, grass = 4, car = 5 };

inline constexpr std::int32_t kSynthClasses = 6;
inline constexpr float kBuildingMinHeight = 5.0f;
inline constexpr float kBuildingMaxHeight = 30.0f;
inline constexpr float kTreeMinHeight = 2.0f;
inline constexpr float kTreeMaxHeight = 8.0f;
inline constexpr float kCarHeight = 1.5f;

struct SynthScene {
    Raster rgb;
    Raster height;
    Raster labels;
};

/// Deterministic size x size scene: roads, grass and cars on textured ground,
/// flat-roofed buildings and dome-shaped trees casting shadows. `num_classes`
/// between 2 and 6 keeps that many leading classes; objects of dropped
/// classes are not drawn.
SynthScene synth_scene(std::uint64_t seed, std::size_t size, std::size_t num_classes = kSynthClasses);

}  // namespace aeromtl
