#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "delaystab/segment.hpp"

namespace delaystab {

struct FourierFamily {
    unsigned harmonics = 3;
};
struct PolynomialFamily {
    unsigned degree = 2;
};
struct PiecewiseLinearFamily {
    unsigned breakpoints = 3;
};
using SamplerFamily = std::variant<FourierFamily, PolynomialFamily, PiecewiseLinearFamily>;

/// How the radius of a sample inside the ball is chosen.
enum class RadialMode {
    Uniform,   // u * target_norm with u uniform on (0, 1]
    Boundary,  // exactly on the sphere
    Mixed,     // even indices on the sphere, odd indices uniform
};

struct SamplerConfig {
    SamplerFamily family = FourierFamily{};
    SpaceSpec target_space = SpaceSpec::sup_c0();
    double target_norm = 1.0;
    std::size_t dimension = 1;
    std::uint64_t seed = 0;
    double delay = 1.0;
    std::size_t intervals = 200;
    RadialMode radial = RadialMode::Uniform;
    NormOptions norms{};
};

void validate(const SamplerConfig& cfg);

/// Sample `index` of the stream; depends only on (seed, index).
Segment sample_one(const SamplerConfig& cfg, std::size_t index);

/// Samples 0..count-1.
std::vector<Segment> sample(const SamplerConfig& cfg, std::size_t count);

}  // namespace delaystab
