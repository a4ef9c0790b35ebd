#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nltv/common.hpp"
#include "nltv/hsi.hpp"

namespace nltv {

struct PatchConfig {
    int patch_radius = 1;        // 1 -> 3x3 patches
    std::size_t m = 10;          // neighbours per pixel
    double sigma = 0.0;          // Gaussian patch-weight std (pixels); <= 0 selects patch_radius (or 1)
    bool binarize = true;
    bool normalize_spectra = false;  // compare unit-norm spectra instead of raw reflectance
    std::size_t ann_trees = 4;
    std::size_t ann_checks = 512;
    std::uint64_t seed = 0;

    void validate() const;
    double effective_sigma() const;
};

// Directed weighted graph with exactly m out-edges per pixel. Edge e = i*m + s
// goes from pixel i to neighbors()[e] with weight weights()[e].
class NonlocalGraph {
public:
    NonlocalGraph() = default;
    NonlocalGraph(std::size_t pixels, std::size_t m, std::vector<std::uint32_t> targets,
                  std::vector<double> weights);

    std::size_t pixels() const noexcept { return pixels_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t edges() const noexcept { return targets_.size(); }

    const std::vector<std::uint32_t>& targets() const noexcept { return targets_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& sqrt_weights() const noexcept { return sqrt_weights_; }

    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {targets_.data() + i * m_, m_};
    }

    // In-edges of pixel j as edge ids, via a CSR transpose index.
    std::span<const std::uint32_t> in_edges(std::size_t j) const {
        return {in_edges_.data() + in_offsets_[j], in_offsets_[j + 1] - in_offsets_[j]};
    }

    // Upper estimate of the operator norm of the nonlocal gradient; computed once.
    double operator_norm() const noexcept { return operator_norm_; }

private:
    std::size_t pixels_ = 0;
    std::size_t m_ = 0;
    std::vector<std::uint32_t> targets_;
    std::vector<double> weights_;
    std::vector<double> sqrt_weights_;
    std::vector<std::size_t> in_offsets_;
    std::vector<std::uint32_t> in_edges_;
    double operator_norm_ = 0.0;
};

// Per-edge, per-cluster values sharing a graph's sparsity pattern. Entry
// (e, l) is stored at values[e*k + l]. Holds both nonlocal gradients and the
// PDHG dual variable.
struct EdgeField {
    std::size_t edges = 0;
    std::size_t k = 0;
    std::vector<double> values;

    EdgeField() = default;
    EdgeField(std::size_t edges_, std::size_t k_) : edges(edges_), k(k_), values(edges_ * k_, 0.0) {}

    double& at(std::size_t e, std::size_t l) { return values[e * k + l]; }
    double at(std::size_t e, std::size_t l) const { return values[e * k + l]; }
};

// Normalised Gaussian weights over the (2R+1)^2 patch offsets, row-major.
std::vector<double> patch_kernel(const PatchConfig& cfg);

// Gaussian-weighted sum of squared spectral differences over patch offsets,
// with clamp-to-edge boundary handling.
double patch_distance(const HsiCube& cube, std::size_t i, std::size_t j, const PatchConfig& cfg);

// m approximate nearest patches per pixel (self excluded) by a randomized
// k-d forest over patch vectors pre-scaled by sqrt(G_sigma).
NonlocalGraph build_graph(const HsiCube& cube, const PatchConfig& cfg);

// Exhaustive k nearest neighbours under the patch metric. Quadratic cost; for
// small cubes and for checking the forest.
std::vector<std::vector<std::uint32_t>> exact_patch_knn(const HsiCube& cube, const PatchConfig& cfg,
                                                        std::size_t count);

// (grad u_l)_{e=(i,j)} = sqrt(w_ij) (u_jl - u_il)
EdgeField gradient(const NonlocalGraph& g, const Matrix& u);
void gradient(const NonlocalGraph& g, const Matrix& u, EdgeField& out);

// (div v)_{i,l} = sum_j sqrt(w_ij) v_ij,l - sqrt(w_ji) v_ji,l
Matrix divergence(const NonlocalGraph& g, const EdgeField& v);
void divergence(const NonlocalGraph& g, const EdgeField& v, Matrix& out);

// Sum over clusters and pixels of the row-wise L2 norm.
double l1_norm(const NonlocalGraph& g, const EdgeField& v);
// Max over clusters and pixels of the row-wise L2 norm.
double linf_norm(const NonlocalGraph& g, const EdgeField& v);

// Power iteration on -div(grad(.)) (50 iterations), scaled by 1.05 and capped
// by sqrt(2 (max out-strength + max in-strength)).
double estimate_operator_norm(const NonlocalGraph& g);

// Binary edge list: u64 pixels, u64 m, then pixels*m records of
// (u64 target, f64 weight), all little-endian.
void save_graph(const NonlocalGraph& g, const std::filesystem::path& path);
NonlocalGraph load_graph(const std::filesystem::path& path);

}  // namespace nltv
