#pragma once

#include "tgs/dilation.hpp"
#include "tgs/model.hpp"
#include "tgs/vec.hpp"

#include <cstdint>
#include <vector>

namespace tgs {

inline constexpr int kTileSize = 16;
// Front-to-back blending stops once transmittance drops below this.
inline constexpr double kTerminationTransmittance = 1e-4;
// A Gaussian counts as "visited" in an iteration when its blend weight
// exceeds this at one or more active pixels.
inline constexpr double kMinVisitWeight = 1e-4;
// Splats are culled from pixels/tiles outside this many sigmas.
inline constexpr double kCullSigmas = 3.0;

template <typename T>
struct RenderOutput {
    std::vector<Vec3<T>> colors;              // by dense rank
    std::vector<T> final_transmittance;       // by dense rank
    uint64_t blend_op_count = 0;
};

// Per-parameter gradients, same cardinality and ordering as the model.
template <typename T>
struct GradientSet {
    std::vector<Vec2<T>> position;
    std::vector<T> rotation;
    std::vector<Vec2<T>> log_scales;
    std::vector<T> raw_opacity;
    std::vector<Vec3<T>> color;

    size_t size() const { return rotation.size(); }

    void assign_zero(size_t n) {
        position.assign(n, Vec2<T>{});
        rotation.assign(n, T(0));
        log_scales.assign(n, Vec2<T>{});
        raw_opacity.assign(n, T(0));
        color.assign(n, Vec3<T>{});
    }
};

struct RenderOptions {
    int threads = 1;
    // 0 means "use the pattern's p"; tests override it to compare dilated
    // renders against a dense render of the identically filtered model.
    int lowpass_p = 0;
};

// Forward pass (Eq. 2) at the pattern's active pixels. Splats blend in
// ascending depth_key order (ties by creation id) with the low-pass-filtered
// covariance; inactive pixels are never touched.
template <typename T>
RenderOutput<T> render(const GaussianModel<T>& model, const DilationPattern& pattern,
                       Vec3<T> background, const RenderOptions& opts = {});

// Analytic gradients of the loss through Eq. 2, the logistic activations, the
// low-pass filter and the covariance factorization. Recomputes forward
// blending per tile; pixel_loss_grads is indexed by dense rank and background
// must match the forward pass. Also updates the model's DensifyStats.
template <typename T>
GradientSet<T> backward(GaussianModel<T>& model, const DilationPattern& pattern,
                        Vec3<T> background, const std::vector<Vec3<T>>& pixel_loss_grads,
                        const RenderOptions& opts = {});

} // namespace tgs
