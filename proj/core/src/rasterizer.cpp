#include "tgs/rasterizer.hpp"

#include "tgs/threading.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace tgs {

namespace {

template <typename T>
struct PreparedSplat {
    Vec2<T> mean;
    T inv00, inv01, inv11; // inverse of the low-pass-filtered covariance
    T alpha;
    Vec3<T> color;
    T rx, ry; // 3-sigma half extents in pixels
    uint32_t orig;
};

template <typename T>
std::vector<PreparedSplat<T>> prepare_splats(const GaussianModel<T>& model, int lowpass_p) {
    const auto& order = model.sorted_order();
    std::vector<PreparedSplat<T>> out;
    out.reserve(order.size());
    for (uint32_t idx : order) {
        const Gaussian2D<T>& g = model[idx];
        const Covariance2x2<T> cov =
            apply_lowpass(covariance_from_params(g.rotation, g.log_scales), lowpass_p);
        const Covariance2x2<T> inv = invert(cov);
        PreparedSplat<T> s;
        s.mean = g.position;
        s.inv00 = inv.s00;
        s.inv01 = inv.s01;
        s.inv11 = inv.s11;
        s.alpha = activate(g.raw_opacity);
        s.color = {activate(g.color.x), activate(g.color.y), activate(g.color.z)};
        s.rx = T(kCullSigmas) * std::sqrt(cov.s00);
        s.ry = T(kCullSigmas) * std::sqrt(cov.s11);
        s.orig = idx;
        out.push_back(s);
    }
    return out;
}

// Pixel-index interval [lo, hi] touched by a half extent r around center m
// with samples at integer + 0.5. Empty when lo > hi.
template <typename T>
inline void pixel_span(T m, T r, int limit, int& lo, int& hi) {
    lo = static_cast<int>(std::ceil(static_cast<double>(m - r) - 0.5));
    hi = static_cast<int>(std::floor(static_cast<double>(m + r) - 0.5));
    if (lo < 0) lo = 0;
    if (hi > limit - 1) hi = limit - 1;
}

// CSR lists of prepared-splat indices per tile; lists inherit blend order.
struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<uint32_t> offsets;
    std::vector<uint32_t> items;
    int tile_count() const { return tiles_x * tiles_y; }
};

template <typename T>
TileGrid build_tile_grid(const std::vector<PreparedSplat<T>>& splats, int width, int height) {
    TileGrid grid;
    grid.tiles_x = (width + kTileSize - 1) / kTileSize;
    grid.tiles_y = (height + kTileSize - 1) / kTileSize;
    grid.offsets.assign(grid.tile_count() + 1, 0);

    auto tile_span = [&](const PreparedSplat<T>& s, int& tx0, int& tx1, int& ty0, int& ty1) {
        int px0, px1, py0, py1;
        pixel_span(s.mean.x, s.rx, width, px0, px1);
        pixel_span(s.mean.y, s.ry, height, py0, py1);
        if (px0 > px1 || py0 > py1) return false;
        tx0 = px0 / kTileSize;
        tx1 = px1 / kTileSize;
        ty0 = py0 / kTileSize;
        ty1 = py1 / kTileSize;
        return true;
    };

    for (const auto& s : splats) {
        int tx0, tx1, ty0, ty1;
        if (!tile_span(s, tx0, tx1, ty0, ty1)) continue;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) ++grid.offsets[ty * grid.tiles_x + tx + 1];
    }
    for (size_t i = 1; i < grid.offsets.size(); ++i) grid.offsets[i] += grid.offsets[i - 1];
    grid.items.resize(grid.offsets.back());
    std::vector<uint32_t> cursor(grid.offsets.begin(), grid.offsets.end() - 1);
    for (uint32_t i = 0; i < splats.size(); ++i) {
        int tx0, tx1, ty0, ty1;
        if (!tile_span(splats[i], tx0, tx1, ty0, ty1)) continue;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) grid.items[cursor[ty * grid.tiles_x + tx]++] = i;
    }
    return grid;
}

// Front-to-back blend at one pixel. on_blend(list_pos, dx, dy, g, sigma,
// trans_before, weight) fires for every blended splat; the no-op case
// compiles down to the plain forward walk, so forward and backward share one
// arithmetic path bit for bit.
template <typename T, typename F>
inline void walk_pixel(const std::vector<PreparedSplat<T>>& splats, const uint32_t* items,
                       uint32_t count, T px, T py, Vec3<T> background, uint64_t& ops,
                       Vec3<T>& out_color, T& out_trans, F&& on_blend) {
    T trans = T(1);
    Vec3<T> color{};
    for (uint32_t k = 0; k < count; ++k) {
        const PreparedSplat<T>& s = splats[items[k]];
        const T dx = px - s.mean.x;
        const T dy = py - s.mean.y;
        if (!(std::abs(dx) <= s.rx && std::abs(dy) <= s.ry)) continue;
        const T q = s.inv00 * dx * dx + T(2) * s.inv01 * dx * dy + s.inv11 * dy * dy;
        const T g = std::exp(T(-0.5) * q);
        const T sigma = s.alpha * g;
        const T w = sigma * trans;
        color.x += w * s.color.x;
        color.y += w * s.color.y;
        color.z += w * s.color.z;
        on_blend(k, dx, dy, g, sigma, trans, w);
        trans *= (T(1) - sigma);
        ++ops;
        if (trans < T(kTerminationTransmittance)) break;
    }
    color.x += trans * background.x;
    color.y += trans * background.y;
    color.z += trans * background.z;
    out_color = color;
    out_trans = trans;
}

inline int resolve_lowpass(const DilationPattern& pattern, const RenderOptions& opts) {
    return opts.lowpass_p > 0 ? opts.lowpass_p : pattern.pattern_size();
}

} // namespace

template <typename T>
RenderOutput<T> render(const GaussianModel<T>& model, const DilationPattern& pattern,
                       Vec3<T> background, const RenderOptions& opts) {
    const int width = pattern.width();
    const int height = pattern.height();
    const auto splats = prepare_splats(model, resolve_lowpass(pattern, opts));
    const TileGrid grid = build_tile_grid(splats, width, height);

    RenderOutput<T> out;
    out.colors.assign(pattern.active_count(), Vec3<T>{});
    out.final_transmittance.assign(pattern.active_count(), T(1));
    std::atomic<uint64_t> total_ops{0};

    const int p = pattern.pattern_size();
    ThreadPool pool(opts.threads);
    pool.parallel_for(0, grid.tile_count(), [&](int t_begin, int t_end) {
        uint64_t ops = 0;
        for (int t = t_begin; t < t_end; ++t) {
            const uint32_t* items = grid.items.data() + grid.offsets[t];
            const uint32_t count = grid.offsets[t + 1] - grid.offsets[t];
            const int tx = t % grid.tiles_x;
            const int ty = t / grid.tiles_x;
            const int px1 = std::min(width, (tx + 1) * kTileSize);
            const int py1 = std::min(height, (ty + 1) * kTileSize);
            const int ax = pattern.first_active_at_or_after(tx * kTileSize, pattern.offset_x());
            const int ay = pattern.first_active_at_or_after(ty * kTileSize, pattern.offset_y());
            for (int y = ay; y < py1; y += p) {
                for (int x = ax; x < px1; x += p) {
                    const int rank = pattern.rank_of(x, y);
                    walk_pixel(
                        splats, items, count, T(x) + T(0.5), T(y) + T(0.5), background, ops,
                        out.colors[rank], out.final_transmittance[rank],
                        [](uint32_t, T, T, T, T, T, T) {});
                }
            }
        }
        total_ops.fetch_add(ops, std::memory_order_relaxed);
    });
    out.blend_op_count = total_ops.load();
    return out;
}

namespace {

// Screen-space gradient accumulators for one tile, indexed by list position.
template <typename T>
struct TileGradients {
    std::vector<Vec2<T>> d_mean;
    std::vector<T> d_sig00, d_sig01, d_sig11; // dL/dSigma' (symmetric, single off-diag entry)
    std::vector<T> d_alpha;
    std::vector<Vec3<T>> d_color;
    std::vector<T> max_weight;
    std::vector<uint8_t> touched;

    void init(uint32_t n) {
        d_mean.assign(n, Vec2<T>{});
        d_sig00.assign(n, T(0));
        d_sig01.assign(n, T(0));
        d_sig11.assign(n, T(0));
        d_alpha.assign(n, T(0));
        d_color.assign(n, Vec3<T>{});
        max_weight.assign(n, T(0));
        touched.assign(n, 0);
    }
};

template <typename T>
struct Contribution {
    uint32_t k;
    T dx, dy, g, sigma, trans, w;
};

} // namespace

template <typename T>
GradientSet<T> backward(GaussianModel<T>& model, const DilationPattern& pattern,
                        Vec3<T> background, const std::vector<Vec3<T>>& pixel_loss_grads,
                        const RenderOptions& opts) {
    if (static_cast<int>(pixel_loss_grads.size()) != pattern.active_count()) {
        throw std::invalid_argument("backward: loss-gradient count does not match pattern ranks");
    }
    const int width = pattern.width();
    const int height = pattern.height();
    const auto splats = prepare_splats(model, resolve_lowpass(pattern, opts));
    const TileGrid grid = build_tile_grid(splats, width, height);

    const int p = pattern.pattern_size();
    std::vector<TileGradients<T>> tile_grads(grid.tile_count());

    ThreadPool pool(opts.threads);
    pool.parallel_for(0, grid.tile_count(), [&](int t_begin, int t_end) {
        uint64_t ops = 0;
        std::vector<Contribution<T>> contribs;
        for (int t = t_begin; t < t_end; ++t) {
            const uint32_t* items = grid.items.data() + grid.offsets[t];
            const uint32_t count = grid.offsets[t + 1] - grid.offsets[t];
            if (count == 0) continue;
            TileGradients<T>& local = tile_grads[t];
            local.init(count);
            const int tx = t % grid.tiles_x;
            const int ty = t / grid.tiles_x;
            const int px1 = std::min(width, (tx + 1) * kTileSize);
            const int py1 = std::min(height, (ty + 1) * kTileSize);
            const int ax = pattern.first_active_at_or_after(tx * kTileSize, pattern.offset_x());
            const int ay = pattern.first_active_at_or_after(ty * kTileSize, pattern.offset_y());
            for (int y = ay; y < py1; y += p) {
                for (int x = ax; x < px1; x += p) {
                    const int rank = pattern.rank_of(x, y);
                    contribs.clear();
                    Vec3<T> color;
                    T trans_final;
                    walk_pixel(splats, items, count, T(x) + T(0.5), T(y) + T(0.5), background,
                               ops, color, trans_final,
                               [&](uint32_t k, T dx, T dy, T g, T sigma, T trans, T w) {
                                   contribs.push_back({k, dx, dy, g, sigma, trans, w});
                                   // Visits count whenever the weight clears the
                                   // floor, regardless of the loss gradient.
                                   local.touched[k] = 1;
                                   if (w > local.max_weight[k]) local.max_weight[k] = w;
                               });
                    const Vec3<T> gc = pixel_loss_grads[rank];
                    if (gc.x == T(0) && gc.y == T(0) && gc.z == T(0)) continue;
                    // Suffix S_i = sum_{k>i} w_k c_k + T_final * background.
                    Vec3<T> suffix = background * trans_final;
                    for (size_t ci = contribs.size(); ci-- > 0;) {
                        const Contribution<T>& ct = contribs[ci];
                        const PreparedSplat<T>& s = splats[items[ct.k]];
                        local.d_color[ct.k] += gc * ct.w;
                        // dC/dsigma_i = T_i c_i - S_i / (1 - sigma_i)
                        const T inv_rest = T(1) / (T(1) - ct.sigma);
                        const Vec3<T> dC_dsigma = s.color * ct.trans - suffix * inv_rest;
                        const T d_sigma = gc.dot(dC_dsigma);
                        local.d_alpha[ct.k] += d_sigma * ct.g;
                        // dL/dq through G = exp(-q/2).
                        const T d_q = d_sigma * s.alpha * T(-0.5) * ct.g;
                        const T adx = s.inv00 * ct.dx + s.inv01 * ct.dy;
                        const T ady = s.inv01 * ct.dx + s.inv11 * ct.dy;
                        // dq/dmu = -2 A delta; dL/dSigma' = -dq (A delta)(A delta)^T.
                        local.d_mean[ct.k] += Vec2<T>(T(-2) * d_q * adx, T(-2) * d_q * ady);
                        local.d_sig00[ct.k] += -d_q * adx * adx;
                        local.d_sig01[ct.k] += -d_q * adx * ady;
                        local.d_sig11[ct.k] += -d_q * ady * ady;
                        suffix += s.color * ct.w;
                    }
                }
            }
        }
        (void)ops;
    });

    const size_t n = model.size();
    std::vector<Vec2<T>> g_mean(n);
    std::vector<T> g_sig00(n, T(0)), g_sig01(n, T(0)), g_sig11(n, T(0)), g_alpha(n, T(0));
    std::vector<Vec3<T>> g_color(n);
    std::vector<T> max_weight(n, T(0));
    std::vector<uint8_t> touched(n, 0);

    // Sequential merge in tile order keeps results independent of worker count.
    for (int t = 0; t < grid.tile_count(); ++t) {
        const TileGradients<T>& local = tile_grads[t];
        if (local.touched.empty()) continue;
        const uint32_t* items = grid.items.data() + grid.offsets[t];
        const uint32_t count = grid.offsets[t + 1] - grid.offsets[t];
        for (uint32_t k = 0; k < count; ++k) {
            if (!local.touched[k]) continue;
            const uint32_t orig = splats[items[k]].orig;
            touched[orig] = 1;
            g_mean[orig] += local.d_mean[k];
            g_sig00[orig] += local.d_sig00[k];
            g_sig01[orig] += local.d_sig01[k];
            g_sig11[orig] += local.d_sig11[k];
            g_alpha[orig] += local.d_alpha[k];
            g_color[orig] += local.d_color[k];
            if (local.max_weight[k] > max_weight[orig]) max_weight[orig] = local.max_weight[k];
        }
    }

    // Chain screen-space gradients back to the raw parameters.
    GradientSet<T> grads;
    grads.assign_zero(n);
    for (size_t i = 0; i < n; ++i) {
        if (!touched[i]) continue;
        const Gaussian2D<T>& g = model[i];
        grads.position[i] = g_mean[i];
        const T c = std::cos(g.rotation);
        const T s = std::sin(g.rotation);
        const T a = std::exp(T(2) * g.log_scales.x);
        const T b = std::exp(T(2) * g.log_scales.y);
        const T m00 = g_sig00[i], m01 = g_sig01[i], m11 = g_sig11[i];
        // Frobenius contraction <dL/dSigma, dSigma/dtheta> with symmetric terms.
        const T cs = c * s;
        const T amb = a - b;
        grads.rotation[i] =
            m00 * (T(-2) * cs * amb) + T(2) * m01 * ((c * c - s * s) * amb) + m11 * (T(2) * cs * amb);
        grads.log_scales[i].x = T(2) * a * (m00 * c * c + T(2) * m01 * cs + m11 * s * s);
        grads.log_scales[i].y = T(2) * b * (m00 * s * s - T(2) * m01 * cs + m11 * c * c);
        const T alpha = activate(g.raw_opacity);
        grads.raw_opacity[i] = g_alpha[i] * activate_derivative_from_value(alpha);
        const Vec3<T> col{activate(g.color.x), activate(g.color.y), activate(g.color.z)};
        grads.color[i] = {g_color[i].x * activate_derivative_from_value(col.x),
                          g_color[i].y * activate_derivative_from_value(col.y),
                          g_color[i].z * activate_derivative_from_value(col.z)};
    }

    // Densification statistics: norms and visit counts for splats whose blend
    // weight cleared the visit floor somewhere this iteration.
    DensifyStats<T>& stats = model.stats();
    for (size_t i = 0; i < n; ++i) {
        if (max_weight[i] > T(kMinVisitWeight)) {
            stats.pos_grad_norm_accum[i] += grads.position[i].norm();
            stats.color_grad_norm_accum[i] += grads.color[i].norm();
            stats.accum_count[i] += 1;
            stats.visit_count[i] += 1;
            stats.window_visit_count[i] += 1;
        }
    }
    return grads;
}

template RenderOutput<float> render(const GaussianModel<float>&, const DilationPattern&,
                                    Vec3<float>, const RenderOptions&);
template RenderOutput<double> render(const GaussianModel<double>&, const DilationPattern&,
                                     Vec3<double>, const RenderOptions&);
template GradientSet<float> backward(GaussianModel<float>&, const DilationPattern&, Vec3<float>,
                                     const std::vector<Vec3<float>>&, const RenderOptions&);
template GradientSet<double> backward(GaussianModel<double>&, const DilationPattern&, Vec3<double>,
                                      const std::vector<Vec3<double>>&, const RenderOptions&);

} // namespace tgs
