#pragma once

// Randomized k-d forest for approximate nearest-neighbour search in
// high-dimensional spaces (Silpa-Anan & Hartley style, as popularised by
// FLANN): each tree splits on a dimension drawn at random among the highest
// variance ones, and queries share one best-bin-first priority queue across
// all trees, stopping after a fixed number of leaf-point checks.
//
// The point set is accessed through a `Points` type providing
//   std::size_t size() const;
//   std::size_t dim() const;
//   double coord(std::size_t i, std::size_t d) const;
//   double dist2(std::size_t i, std::size_t j, double bound) const;
// where dist2 may return any value > bound once the partial sum exceeds it.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

namespace nltv {

struct Neighbor {
    std::uint32_t index;
    double dist2;
};

template <class Points>
class KdForest {
public:
    KdForest(const Points& points, std::size_t trees, std::uint64_t seed, std::size_t leaf_size = 4)
        : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)), visited_(points.size(), 0) {
        std::mt19937_64 rng(seed);
        trees_.resize(std::max<std::size_t>(trees, 1));
        for (auto& t : trees_) build_tree(t, rng);
    }

    // `count` approximate nearest neighbours of point `query` (which may be
    // returned as its own neighbour), sorted by increasing distance. At least
    // `checks` leaf points are examined, and more if fewer than `count` were
    // found.
    std::vector<Neighbor> query(std::size_t query, std::size_t count, std::size_t checks) {
        ++epoch_;
        if (epoch_ == 0) {
            std::fill(visited_.begin(), visited_.end(), 0);
            epoch_ = 1;
        }
        count = std::min(count, points_.size());
        Result result(count);
        BranchQueue branches;
        std::size_t checked = 0;
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            descend(t, 0, 0.0, query, result, branches, checked);
        }
        while (!branches.empty() && (checked < checks || !result.full())) {
            const Branch b = branches.top();
            branches.pop();
            if (result.full() && b.mindist > result.worst()) continue;
            descend(b.tree, b.node, b.mindist, query, result, branches, checked);
        }
        return result.sorted();
    }

private:
    struct Node {
        std::int32_t left = -1;   // -1 for leaves
        std::int32_t right = -1;
        std::uint32_t dim = 0;
        double split = 0.0;
        std::uint32_t begin = 0;  // leaf range into Tree::order
        std::uint32_t end = 0;
    };
    struct Tree {
        std::vector<Node> nodes;
        std::vector<std::uint32_t> order;
    };
    struct Branch {
        double mindist;
        std::uint32_t tree;
        std::int32_t node;
        bool operator>(const Branch& o) const { return mindist > o.mindist; }
    };
    using BranchQueue = std::priority_queue<Branch, std::vector<Branch>, std::greater<>>;

    class Result {
    public:
        explicit Result(std::size_t cap) : cap_(cap) { heap_.reserve(cap + 1); }
        bool full() const { return heap_.size() >= cap_; }
        double worst() const {
            return full() ? heap_.front().dist2 : std::numeric_limits<double>::infinity();
        }
        void offer(std::uint32_t idx, double d) {
            if (cap_ == 0) return;
            if (full()) {
                if (d >= heap_.front().dist2) return;
                std::pop_heap(heap_.begin(), heap_.end(), cmp);
                heap_.back() = {idx, d};
            } else {
                heap_.push_back({idx, d});
            }
            std::push_heap(heap_.begin(), heap_.end(), cmp);
        }
        std::vector<Neighbor> sorted() {
            std::sort(heap_.begin(), heap_.end(), [](const Neighbor& a, const Neighbor& b) {
                return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
            });
            return heap_;
        }

    private:
        static bool cmp(const Neighbor& a, const Neighbor& b) { return a.dist2 < b.dist2; }
        std::size_t cap_;
        std::vector<Neighbor> heap_;
    };

    void build_tree(Tree& tree, std::mt19937_64& rng) {
        tree.order.resize(points_.size());
        std::iota(tree.order.begin(), tree.order.end(), 0u);
        std::shuffle(tree.order.begin(), tree.order.end(), rng);
        tree.nodes.clear();
        tree.nodes.reserve(2 * points_.size() / leaf_size_ + 1);
        build_node(tree, 0, static_cast<std::uint32_t>(points_.size()), rng);
    }

    std::int32_t build_node(Tree& tree, std::uint32_t begin, std::uint32_t end, std::mt19937_64& rng) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (end - begin <= leaf_size_) {
            make_leaf(tree, id, begin, end);
            return id;
        }

        // Mean and variance per dimension over a sample of the range.
        constexpr std::size_t kSample = 100;
        constexpr std::size_t kTopDims = 5;
        const std::size_t dim = points_.dim();
        const std::size_t n = std::min<std::size_t>(kSample, end - begin);
        mean_.assign(dim, 0.0);
        var_.assign(dim, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            const auto p = tree.order[begin + s];
            for (std::size_t d = 0; d < dim; ++d) mean_[d] += points_.coord(p, d);
        }
        for (auto& v : mean_) v /= static_cast<double>(n);
        for (std::size_t s = 0; s < n; ++s) {
            const auto p = tree.order[begin + s];
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = points_.coord(p, d) - mean_[d];
                var_[d] += diff * diff;
            }
        }
        dims_.resize(dim);
        std::iota(dims_.begin(), dims_.end(), 0u);
        const std::size_t top = std::min(kTopDims, dim);
        std::partial_sort(dims_.begin(), dims_.begin() + static_cast<std::ptrdiff_t>(top), dims_.end(),
                          [&](std::uint32_t a, std::uint32_t b) { return var_[a] > var_[b] || (var_[a] == var_[b] && a < b); });
        std::size_t usable = 0;
        while (usable < top && var_[dims_[usable]] > 0.0) ++usable;
        if (usable == 0) {
            make_leaf(tree, id, begin, end);
            return id;
        }
        const std::uint32_t split_dim = dims_[std::uniform_int_distribution<std::size_t>(0, usable - 1)(rng)];
        double split = mean_[split_dim];

        auto first = tree.order.begin() + begin;
        auto last = tree.order.begin() + end;
        auto mid = std::partition(first, last, [&](std::uint32_t p) { return points_.coord(p, split_dim) < split; });
        if (mid == first || mid == last) {
            // Sample mean landed outside the range's spread: split at the median instead.
            auto nth = first + (last - first) / 2;
            std::nth_element(first, nth, last, [&](std::uint32_t a, std::uint32_t b) {
                return points_.coord(a, split_dim) < points_.coord(b, split_dim);
            });
            split = points_.coord(*nth, split_dim);
            mid = std::partition(first, last, [&](std::uint32_t p) { return points_.coord(p, split_dim) < split; });
            if (mid == first) {
                mid = std::partition(first, last, [&](std::uint32_t p) { return points_.coord(p, split_dim) <= split; });
                if (mid == last) {
                    make_leaf(tree, id, begin, end);
                    return id;
                }
                // Points equal to the split value go left; keep the threshold consistent.
                split = std::nextafter(split, std::numeric_limits<double>::infinity());
            }
        }
        const auto mid_index = static_cast<std::uint32_t>(mid - tree.order.begin());
        const auto left = build_node(tree, begin, mid_index, rng);
        const auto right = build_node(tree, mid_index, end, rng);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.left = left;
        node.right = right;
        node.dim = split_dim;
        node.split = split;
        return id;
    }

    static void make_leaf(Tree& tree, std::int32_t id, std::uint32_t begin, std::uint32_t end) {
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.begin = begin;
        node.end = end;
    }

    void descend(std::size_t t, std::int32_t node_id, double mindist, std::size_t query, Result& result,
                 BranchQueue& branches, std::size_t& checked) {
        const Tree& tree = trees_[t];
        while (true) {
            const Node& node = tree.nodes[static_cast<std::size_t>(node_id)];
            if (node.left < 0) {
                for (std::uint32_t s = node.begin; s < node.end; ++s) {
                    const auto p = tree.order[s];
                    if (visited_[p] == epoch_) continue;
                    visited_[p] = epoch_;
                    ++checked;
                    const double bound = result.worst();
                    const double d = points_.dist2(query, p, bound);
                    if (d < bound) result.offer(p, d);
                }
                return;
            }
            const double diff = points_.coord(query, node.dim) - node.split;
            const std::int32_t near = diff < 0 ? node.left : node.right;
            const std::int32_t far = diff < 0 ? node.right : node.left;
            const double far_dist = mindist + diff * diff;
            if (far_dist < result.worst()) {
                branches.push({far_dist, static_cast<std::uint32_t>(t), far});
            }
            node_id = near;
        }
    }

    const Points& points_;
    std::size_t leaf_size_;
    std::vector<Tree> trees_;
    std::vector<std::uint32_t> visited_;
    std::uint32_t epoch_ = 0;
    std::vector<double> mean_, var_;
    std::vector<std::uint32_t> dims_;
};

}  // namespace nltv
