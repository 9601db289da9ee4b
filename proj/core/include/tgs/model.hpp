#pragma once

#include "tgs/gaussian.hpp"

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace tgs {

// Per-Gaussian densification statistics, kept in lockstep with the model.
// The three accumulators reset after every densification event; visit_count is
// the lifetime counter and never resets; window_visit_count resets at each
// visit audit.
template <typename T>
struct DensifyStats {
    std::vector<T> pos_grad_norm_accum;
    std::vector<T> color_grad_norm_accum;
    std::vector<int32_t> accum_count;
    std::vector<int64_t> visit_count;
    std::vector<int64_t> window_visit_count;

    size_t size() const { return accum_count.size(); }

    void push_zero() {
        pos_grad_norm_accum.push_back(T(0));
        color_grad_norm_accum.push_back(T(0));
        accum_count.push_back(0);
        visit_count.push_back(0);
        window_visit_count.push_back(0);
    }

    void reset_accumulators() {
        std::fill(pos_grad_norm_accum.begin(), pos_grad_norm_accum.end(), T(0));
        std::fill(color_grad_norm_accum.begin(), color_grad_norm_accum.end(), T(0));
        std::fill(accum_count.begin(), accum_count.end(), 0);
    }
};

// Growable splat collection plus the parallel statistics arrays and the
// per-Gaussian visit threshold tau_v. Blend order (by depth_key, ties by id)
// is cached and invalidated on structural changes.
template <typename T>
class GaussianModel {
public:
    size_t size() const { return gaussians_.size(); }
    bool empty() const { return gaussians_.empty(); }

    const Gaussian2D<T>& operator[](size_t i) const { return gaussians_[i]; }
    Gaussian2D<T>& operator[](size_t i) { return gaussians_[i]; }

    const std::vector<Gaussian2D<T>>& gaussians() const { return gaussians_; }

    DensifyStats<T>& stats() { return stats_; }
    const DensifyStats<T>& stats() const { return stats_; }

    std::vector<double>& visit_thresholds() { return visit_threshold_; }
    const std::vector<double>& visit_thresholds() const { return visit_threshold_; }

    uint64_t next_id() const { return next_id_; }
    void set_next_id(uint64_t id) { next_id_ = id; }

    // Appends a Gaussian, assigning it the next creation id and fresh stats.
    uint64_t add(Gaussian2D<T> g, double visit_threshold) {
        g.id = next_id_++;
        gaussians_.push_back(g);
        stats_.push_zero();
        visit_threshold_.push_back(visit_threshold);
        order_dirty_ = true;
        return g.id;
    }

    // Removes every Gaussian whose keep flag is false, compacting all parallel
    // arrays. Returns the number removed.
    size_t compact(const std::vector<uint8_t>& keep) {
        assert(keep.size() == gaussians_.size());
        size_t w = 0;
        for (size_t r = 0; r < gaussians_.size(); ++r) {
            if (!keep[r]) continue;
            if (w != r) {
                gaussians_[w] = gaussians_[r];
                stats_.pos_grad_norm_accum[w] = stats_.pos_grad_norm_accum[r];
                stats_.color_grad_norm_accum[w] = stats_.color_grad_norm_accum[r];
                stats_.accum_count[w] = stats_.accum_count[r];
                stats_.visit_count[w] = stats_.visit_count[r];
                stats_.window_visit_count[w] = stats_.window_visit_count[r];
                visit_threshold_[w] = visit_threshold_[r];
            }
            ++w;
        }
        const size_t removed = gaussians_.size() - w;
        gaussians_.resize(w);
        stats_.pos_grad_norm_accum.resize(w);
        stats_.color_grad_norm_accum.resize(w);
        stats_.accum_count.resize(w);
        stats_.visit_count.resize(w);
        stats_.window_visit_count.resize(w);
        visit_threshold_.resize(w);
        if (removed) order_dirty_ = true;
        return removed;
    }

    // Indices in blend order: ascending depth_key, ties broken by creation id.
    const std::vector<uint32_t>& sorted_order() const {
        if (order_dirty_) {
            sorted_order_.resize(gaussians_.size());
            std::iota(sorted_order_.begin(), sorted_order_.end(), 0u);
            std::sort(sorted_order_.begin(), sorted_order_.end(), [&](uint32_t a, uint32_t b) {
                if (gaussians_[a].depth_key != gaussians_[b].depth_key) {
                    return gaussians_[a].depth_key < gaussians_[b].depth_key;
                }
                return gaussians_[a].id < gaussians_[b].id;
            });
            order_dirty_ = false;
        }
        return sorted_order_;
    }

    template <typename U>
    GaussianModel<U> cast() const {
        GaussianModel<U> out;
        for (size_t i = 0; i < gaussians_.size(); ++i) {
            const auto& g = gaussians_[i];
            Gaussian2D<U> h;
            h.position = g.position.template cast<U>();
            h.rotation = static_cast<U>(g.rotation);
            h.log_scales = g.log_scales.template cast<U>();
            h.raw_opacity = static_cast<U>(g.raw_opacity);
            h.color = g.color.template cast<U>();
            h.depth_key = static_cast<U>(g.depth_key);
            out.add(h, visit_threshold_[i]);
            out[i].id = g.id;
            out.stats().pos_grad_norm_accum[i] = static_cast<U>(stats_.pos_grad_norm_accum[i]);
            out.stats().color_grad_norm_accum[i] = static_cast<U>(stats_.color_grad_norm_accum[i]);
            out.stats().accum_count[i] = stats_.accum_count[i];
            out.stats().visit_count[i] = stats_.visit_count[i];
            out.stats().window_visit_count[i] = stats_.window_visit_count[i];
        }
        out.set_next_id(next_id_);
        return out;
    }

private:
    std::vector<Gaussian2D<T>> gaussians_;
    DensifyStats<T> stats_;
    std::vector<double> visit_threshold_;
    uint64_t next_id_ = 0;
    mutable std::vector<uint32_t> sorted_order_;
    mutable bool order_dirty_ = true;
};

} // namespace tgs
