#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nltv/common.hpp"
#include "nltv/graph.hpp"
#include "nltv/hsi.hpp"
#include "nltv/pdhg.hpp"

namespace nltv {

enum class InitMethod { Random, KMeansPlusPlus, KMeans, External };

struct ClusterConfig {
    std::size_t k = 5;
    std::optional<double> lambda;  // nullopt selects auto_params
    std::optional<double> mu;      // nullopt selects auto_params
    Model model = Model::Quadratic;
    InitMethod init = InitMethod::KMeansPlusPlus;
    std::size_t outer_max = 100;
    double outer_tol = 1e-3;
    double eta = 10.0;
    double grid_h = 0.0;     // <= 0 selects the default for k
    double band_eps = 0.0;   // <= 0 selects grid_h / 2
    std::uint64_t seed = 0;

    void validate() const;
    bool grid_h_given() const { return grid_h > 0.0; }
    double effective_grid_h() const;
    double effective_band_eps() const;
};

struct OuterRecord {
    std::size_t outer_iter = 0;
    std::size_t inner_iters = 0;
    double energy = 0.0;
    double changed_fraction = 0.0;
};

struct ClusterResult {
    LabelMap labels;
    Matrix centroids;
    std::vector<OuterRecord> history;
    double lambda = 0.0;
    double mu = 0.0;
    Matrix u;  // final relaxed labelling
};

// Hooks for tests and diagnostics. `inner` sees every PDHG iteration.
struct ClusterHooks {
    IterationObserver inner;
};

// k distinct pixels drawn uniformly.
Matrix init_random(const HsiCube& cube, std::size_t k, std::uint64_t seed);
// K-means++ seeding under the squared mixed distance.
Matrix init_kmeanspp(const HsiCube& cube, std::size_t k, std::uint64_t seed, double mu);

struct KMeansResult {
    LabelMap labels;
    Matrix centroids;
    std::size_t iterations = 0;
};
// Lloyd iterations under the mixed distance from K-means++ seeds.
KMeansResult kmeans(const HsiCube& cube, std::size_t k, std::uint64_t seed, double mu,
                    std::size_t max_iters = 100);

// Per-pixel argmax, ties to the lowest index.
LabelMap threshold_argmax(const Matrix& u, std::size_t rows, std::size_t cols);

// Grid points (n_1 h, ..., n_k h) with sum n_i = 1/h, in lexicographic order
// of (n_1, ..., n_k). interior_only restricts to n_i >= 1.
std::vector<std::vector<double>> simplex_grid(std::size_t k, double h, bool interior_only = true);

struct SimplexClustering {
    LabelMap labels;
    std::vector<double> delta;
    double score = 0.0;
};

// Score g(delta) = -log(prod_l F_l) + eta * exp(G) of the partition
// i -> argmax_l (u_il - delta_l); +inf when a cluster is empty.
double simplex_partition_score(const Matrix& u, std::span<const double> delta, double eta, double band_eps);

// Picks the grid point minimising g(delta) and returns its partition.
SimplexClustering stable_simplex_cluster(const Matrix& u, std::size_t rows, std::size_t cols,
                                         const ClusterConfig& cfg);

// Cluster means; empty clusters are reseeded to the pixel farthest (mixed
// distance) from its nearest non-empty centroid.
Matrix update_centroids(const HsiCube& cube, const LabelMap& map, std::size_t k, const Matrix& prev,
                        double mu);

// Nearest centroid per pixel under the mixed distance.
LabelMap assign_nearest(const HsiCube& cube, const Matrix& centroids, double mu);

struct ModelParams {
    double lambda = 1.0;
    double mu = 0.0;
    bool fallback = false;
};
// lambda and mu from the initial centroids: mu makes the median pairwise
// centroid Euclidean distance a tenth of the median cosine distance; lambda
// makes <u, f> ten times ||grad_w u||_L1 at the nearest-centroid labelling.
ModelParams auto_params(const HsiCube& cube, const NonlocalGraph& graph, const Matrix& centroids,
                        std::optional<double> fixed_mu = std::nullopt);

Matrix initial_centroids(const HsiCube& cube, const ClusterConfig& cfg, double mu,
                         const Matrix* external = nullptr);

ClusterResult run_linear(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                         const SolverConfig& solver, const Matrix* external_centroids = nullptr,
                         const ClusterHooks& hooks = {});
ClusterResult run_quadratic(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                            const SolverConfig& solver, const Matrix* external_centroids = nullptr,
                            const ClusterHooks& hooks = {});
// Dispatches on cfg.model.
ClusterResult run_clustering(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                             const SolverConfig& solver, const Matrix* external_centroids = nullptr,
                             const ClusterHooks& hooks = {});

}  // namespace nltv
