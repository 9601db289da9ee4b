#pragma once

#include "tgs/vec.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace tgs {

// Exact 2D KD-tree (median split). Nearest-neighbour results agree with a
// brute-force scan including the tie rule: equal distances resolve to the
// smaller point index.
template <typename T>
class KdTree2 {
public:
    explicit KdTree2(const std::vector<Vec2<T>>& points) : points_(points) {
        if (points_.empty()) return;
        order_.resize(points_.size());
        for (uint32_t i = 0; i < points_.size(); ++i) order_[i] = i;
        nodes_.reserve(points_.size() * 2);
        root_ = build(0, static_cast<uint32_t>(points_.size()), 0);
    }

    // Nearest neighbour of q; `exclude` (one index) is skipped.
    uint32_t nearest(Vec2<T> q, uint32_t exclude = UINT32_MAX) const {
        Best best;
        search(root_, q, exclude, best);
        return best.index;
    }

    // Nearest neighbour of point i among the other points.
    uint32_t nearest_of(uint32_t i) const { return nearest(points_[i], i); }

    // Indices of the k nearest neighbours of q (excluding `exclude`), ordered
    // by (distance, index).
    std::vector<uint32_t> knn(Vec2<T> q, int k, uint32_t exclude = UINT32_MAX) const {
        std::vector<std::pair<T, uint32_t>> heap; // max-heap on (dist2, index)
        knn_search(root_, q, k, exclude, heap);
        std::sort(heap.begin(), heap.end());
        std::vector<uint32_t> out;
        out.reserve(heap.size());
        for (auto& [d, i] : heap) out.push_back(i);
        return out;
    }

private:
    struct Node {
        uint32_t point = 0;
        int32_t left = -1;
        int32_t right = -1;
        uint8_t axis = 0;
    };

    struct Best {
        T dist2 = std::numeric_limits<T>::infinity();
        uint32_t index = UINT32_MAX;

        bool better(T d2, uint32_t i) const {
            return d2 < dist2 || (d2 == dist2 && i < index);
        }
    };

    int32_t build(uint32_t begin, uint32_t end, int depth) {
        if (begin >= end) return -1;
        const uint8_t axis = static_cast<uint8_t>(depth & 1);
        const uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](uint32_t a, uint32_t b) {
                             const T va = axis == 0 ? points_[a].x : points_[a].y;
                             const T vb = axis == 0 ? points_[b].x : points_[b].y;
                             if (va != vb) return va < vb;
                             return a < b;
                         });
        Node node;
        node.point = order_[mid];
        node.axis = axis;
        const int32_t id = static_cast<int32_t>(nodes_.size());
        nodes_.push_back(node);
        const int32_t left = build(begin, mid, depth + 1);
        const int32_t right = build(mid + 1, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static T dist2(Vec2<T> a, Vec2<T> b) {
        const T dx = a.x - b.x;
        const T dy = a.y - b.y;
        return dx * dx + dy * dy;
    }

    void search(int32_t id, Vec2<T> q, uint32_t exclude, Best& best) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        if (node.point != exclude) {
            const T d2 = dist2(q, points_[node.point]);
            if (best.better(d2, node.point)) best = {d2, node.point};
        }
        const T delta = node.axis == 0 ? q.x - points_[node.point].x : q.y - points_[node.point].y;
        const int32_t near = delta <= T(0) ? node.left : node.right;
        const int32_t far = delta <= T(0) ? node.right : node.left;
        search(near, q, exclude, best);
        // The far side can still hold an equal-distance lower index, so it is
        // pruned only when strictly farther than the current best.
        if (delta * delta <= best.dist2) search(far, q, exclude, best);
    }

    void knn_search(int32_t id, Vec2<T> q, int k, uint32_t exclude,
                    std::vector<std::pair<T, uint32_t>>& heap) const {
        if (id < 0) return;
        const Node& node = nodes_[id];
        if (node.point != exclude) {
            const T d2 = dist2(q, points_[node.point]);
            std::pair<T, uint32_t> cand{d2, node.point};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        const T delta = node.axis == 0 ? q.x - points_[node.point].x : q.y - points_[node.point].y;
        const int32_t near = delta <= T(0) ? node.left : node.right;
        const int32_t far = delta <= T(0) ? node.right : node.left;
        knn_search(near, q, k, exclude, heap);
        if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().first) {
            knn_search(far, q, k, exclude, heap);
        }
    }

    const std::vector<Vec2<T>>& points_;
    std::vector<uint32_t> order_;
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

} // namespace tgs
