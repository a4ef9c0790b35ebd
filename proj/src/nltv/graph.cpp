#include "nltv/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "nltv/kdforest.hpp"

namespace nltv {

namespace fs = std::filesystem;

void PatchConfig::validate() const {
    require(m >= 1, "m must be >= 1");
    require(patch_radius >= 0, "patch_radius must be >= 0");
    require(std::isfinite(sigma), "sigma must be finite");
    require(ann_trees >= 1, "ann_trees must be >= 1");
}

double PatchConfig::effective_sigma() const {
    if (sigma > 0.0) return sigma;
    return patch_radius > 0 ? static_cast<double>(patch_radius) : 1.0;
}

std::vector<double> patch_kernel(const PatchConfig& cfg) {
    const int r = cfg.patch_radius;
    const double s = cfg.effective_sigma();
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
            g.push_back(v);
            total += v;
        }
    }
    for (auto& v : g) v /= total;
    return g;
}

namespace {

// Patch vectors of a cube, materialised lazily: coordinate (t*bands + b) of
// pixel i is sqrt(G(t)) * g(clamp(i + t))[b].
class PatchVectors {
public:
    PatchVectors(const HsiCube& cube, const PatchConfig& cfg)
        : cube_(cube), bands_(cube.bands()), kernel_(patch_kernel(cfg)) {
        const int r = cfg.patch_radius;
        offsets_ = kernel_.size();
        sqrt_kernel_.resize(offsets_);
        for (std::size_t t = 0; t < offsets_; ++t) sqrt_kernel_[t] = std::sqrt(kernel_[t]);
        const auto rows = static_cast<int>(cube.rows());
        const auto cols = static_cast<int>(cube.cols());
        source_.resize(cube.pixels() * offsets_);
        for (int y = 0; y < rows; ++y) {
            for (int x = 0; x < cols; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * cube.cols() + static_cast<std::size_t>(x);
                std::size_t t = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx, ++t) {
                        const int yy = std::clamp(y + dy, 0, rows - 1);
                        const int xx = std::clamp(x + dx, 0, cols - 1);
                        source_[i * offsets_ + t] = static_cast<std::uint32_t>(yy * cols + xx);
                    }
                }
            }
        }
        scale_.assign(cube.pixels(), 1.0);
        if (cfg.normalize_spectra) {
            for (std::size_t i = 0; i < cube.pixels(); ++i) {
                double n2 = 0.0;
                for (float v : cube.spectrum(i)) n2 += static_cast<double>(v) * v;
                scale_[i] = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
            }
        }
    }

    std::size_t size() const { return cube_.pixels(); }
    std::size_t dim() const { return offsets_ * bands_; }

    double coord(std::size_t i, std::size_t d) const {
        const std::size_t t = d / bands_;
        const std::size_t b = d - t * bands_;
        const std::uint32_t src = source_[i * offsets_ + t];
        return sqrt_kernel_[t] * scale_[src] * cube_.spectrum(src)[b];
    }

    double dist2(std::size_t i, std::size_t j, double bound) const {
        double total = 0.0;
        for (std::size_t t = 0; t < offsets_; ++t) {
            const std::uint32_t a = source_[i * offsets_ + t];
            const std::uint32_t b = source_[j * offsets_ + t];
            if (a == b) continue;
            const float* pa = cube_.spectrum(a).data();
            const float* pb = cube_.spectrum(b).data();
            const double sa = scale_[a];
            const double sb = scale_[b];
            double acc = 0.0;
            if (sa == 1.0 && sb == 1.0) {
                float facc = 0.0f;
                // single-precision accumulation lets the loop vectorise
                for (std::size_t k = 0; k < bands_; ++k) {
                    const float diff = pa[k] - pb[k];
                    facc += diff * diff;
                }
                acc = facc;
            } else {
                for (std::size_t k = 0; k < bands_; ++k) {
                    const double diff = sa * pa[k] - sb * pb[k];
                    acc += diff * diff;
                }
            }
            total += kernel_[t] * acc;
            if (total > bound) return total;
        }
        return total;
    }

    double exact_dist2(std::size_t i, std::size_t j) const {
        double total = 0.0;
        for (std::size_t t = 0; t < offsets_; ++t) {
            const std::uint32_t a = source_[i * offsets_ + t];
            const std::uint32_t b = source_[j * offsets_ + t];
            const auto ga = cube_.spectrum(a);
            const auto gb = cube_.spectrum(b);
            double acc = 0.0;
            for (std::size_t k = 0; k < bands_; ++k) {
                const double diff = scale_[a] * ga[k] - scale_[b] * gb[k];
                acc += diff * diff;
            }
            total += kernel_[t] * acc;
        }
        return total;
    }

private:
    const HsiCube& cube_;
    std::size_t bands_;
    std::vector<double> kernel_;
    std::vector<double> sqrt_kernel_;
    std::size_t offsets_ = 0;
    std::vector<std::uint32_t> source_;
    std::vector<double> scale_;
};

void require_pixel(const HsiCube& cube, std::size_t i) {
    require(i < cube.pixels(), "pixel index out of range");
}

// Drops `self`, keeps the first m, and converts distances to weights.
void finish_row(std::size_t self, const std::vector<Neighbor>& found, std::size_t m, bool binarize,
                std::uint32_t* targets, double* weights) {
    std::size_t s = 0;
    for (const auto& n : found) {
        if (n.index == self) continue;
        if (s == m) break;
        targets[s] = n.index;
        weights[s] = n.dist2;
        ++s;
    }
    if (s != m) fail(ErrorKind::InvalidArgument, "neighbour search returned too few candidates");
    if (binarize) {
        std::fill(weights, weights + m, 1.0);
        return;
    }
    // The patch distance d is already a weighted sum of squares; w = d^-2.
    double max_finite = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
        if (weights[q] > 0.0) max_finite = std::max(max_finite, 1.0 / (weights[q] * weights[q]));
    }
    if (max_finite == 0.0) max_finite = 1.0;
    for (std::size_t q = 0; q < m; ++q) {
        weights[q] = weights[q] > 0.0 ? 1.0 / (weights[q] * weights[q]) : max_finite;
        if (!std::isfinite(weights[q])) weights[q] = max_finite;
    }
}

}  // namespace

double patch_distance(const HsiCube& cube, std::size_t i, std::size_t j, const PatchConfig& cfg) {
    require_pixel(cube, i);
    require_pixel(cube, j);
    const PatchVectors pv(cube, cfg);
    return pv.exact_dist2(i, j);
}

NonlocalGraph build_graph(const HsiCube& cube, const PatchConfig& cfg) {
    cfg.validate();
    const std::size_t r = cube.pixels();
    if (r <= cfg.m) {
        fail(ErrorKind::InvalidArgument, "degenerate cube: " + std::to_string(r) +
                                             " pixels cannot supply " + std::to_string(cfg.m) + " neighbours");
    }
    const PatchVectors pv(cube, cfg);
    KdForest<PatchVectors> forest(pv, cfg.ann_trees, cfg.seed);
    std::vector<std::uint32_t> targets(r * cfg.m);
    std::vector<double> weights(r * cfg.m);
    for (std::size_t i = 0; i < r; ++i) {
        auto found = forest.query(i, cfg.m + 1, cfg.ann_checks);
        finish_row(i, found, cfg.m, cfg.binarize, targets.data() + i * cfg.m, weights.data() + i * cfg.m);
    }
    return NonlocalGraph(r, cfg.m, std::move(targets), std::move(weights));
}

std::vector<std::vector<std::uint32_t>> exact_patch_knn(const HsiCube& cube, const PatchConfig& cfg,
                                                        std::size_t count) {
    const PatchVectors pv(cube, cfg);
    const std::size_t r = cube.pixels();
    count = std::min(count, r - 1);
    std::vector<std::vector<std::uint32_t>> out(r);
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < r; ++i) {
        all.clear();
        for (std::size_t j = 0; j < r; ++j) {
            if (j != i) all.push_back({static_cast<std::uint32_t>(j), pv.exact_dist2(i, j)});
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(),
                          [](const Neighbor& a, const Neighbor& b) {
                              return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
                          });
        for (std::size_t q = 0; q < count; ++q) out[i].push_back(all[q].index);
    }
    return out;
}

NonlocalGraph::NonlocalGraph(std::size_t pixels, std::size_t m, std::vector<std::uint32_t> targets,
                             std::vector<double> weights)
    : pixels_(pixels), m_(m), targets_(std::move(targets)), weights_(std::move(weights)) {
    require(targets_.size() == pixels_ * m_, "graph target count must equal pixels*m");
    require(weights_.size() == targets_.size(), "graph weight count must equal edge count");
    require(pixels_ < std::numeric_limits<std::uint32_t>::max(), "graph too large");
    sqrt_weights_.resize(weights_.size());
    std::vector<std::size_t> indegree(pixels_ + 1, 0);
    for (std::size_t e = 0; e < targets_.size(); ++e) {
        const std::size_t i = e / m_;
        const std::uint32_t j = targets_[e];
        require(j < pixels_, "graph target out of range");
        if (j == i) fail(ErrorKind::InvalidArgument, "graph contains a self-loop at pixel " + std::to_string(i));
        require(weights_[e] >= 0.0 && std::isfinite(weights_[e]), "graph weights must be finite and >= 0");
        sqrt_weights_[e] = std::sqrt(weights_[e]);
        ++indegree[j + 1];
    }
    in_offsets_.assign(pixels_ + 1, 0);
    for (std::size_t j = 0; j < pixels_; ++j) in_offsets_[j + 1] = in_offsets_[j] + indegree[j + 1];
    in_edges_.resize(targets_.size());
    std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t e = 0; e < targets_.size(); ++e) {
        in_edges_[cursor[targets_[e]]++] = static_cast<std::uint32_t>(e);
    }
    operator_norm_ = estimate_operator_norm(*this);
}

void gradient(const NonlocalGraph& g, const Matrix& u, EdgeField& out) {
    require(u.rows() == g.pixels(), "gradient: u must have one row per pixel");
    const std::size_t k = u.cols();
    if (out.edges != g.edges() || out.k != k) out = EdgeField(g.edges(), k);
    const auto& tg = g.targets();
    const auto& sw = g.sqrt_weights();
    const std::size_t m = g.m();
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        const double* ui = u.row(i).data();
        for (std::size_t s = 0; s < m; ++s) {
            const std::size_t e = i * m + s;
            const double* uj = u.row(tg[e]).data();
            double* ve = out.values.data() + e * k;
            for (std::size_t l = 0; l < k; ++l) ve[l] = sw[e] * (uj[l] - ui[l]);
        }
    }
}

EdgeField gradient(const NonlocalGraph& g, const Matrix& u) {
    EdgeField out(g.edges(), u.cols());
    gradient(g, u, out);
    return out;
}

void divergence(const NonlocalGraph& g, const EdgeField& v, Matrix& out) {
    require(v.edges == g.edges(), "divergence: field does not match graph pattern");
    const std::size_t k = v.k;
    if (out.rows() != g.pixels() || out.cols() != k) out = Matrix(g.pixels(), k);
    const auto& sw = g.sqrt_weights();
    const std::size_t m = g.m();
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        double* oi = out.row(i).data();
        std::fill(oi, oi + k, 0.0);
        for (std::size_t s = 0; s < m; ++s) {
            const std::size_t e = i * m + s;
            const double* ve = v.values.data() + e * k;
            for (std::size_t l = 0; l < k; ++l) oi[l] += sw[e] * ve[l];
        }
        for (const std::uint32_t e : g.in_edges(i)) {
            const double* ve = v.values.data() + static_cast<std::size_t>(e) * k;
            for (std::size_t l = 0; l < k; ++l) oi[l] -= sw[e] * ve[l];
        }
    }
}

Matrix divergence(const NonlocalGraph& g, const EdgeField& v) {
    Matrix out(g.pixels(), v.k);
    divergence(g, v, out);
    return out;
}

namespace {

template <class Reduce>
double row_norm_reduce(const NonlocalGraph& g, const EdgeField& v, Reduce reduce) {
    require(v.edges == g.edges(), "norm: field does not match graph pattern");
    double acc = 0.0;
    const std::size_t m = g.m();
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        for (std::size_t l = 0; l < v.k; ++l) {
            double s2 = 0.0;
            for (std::size_t s = 0; s < m; ++s) {
                const double x = v.at(i * m + s, l);
                s2 += x * x;
            }
            acc = reduce(acc, std::sqrt(s2));
        }
    }
    return acc;
}

}  // namespace

double l1_norm(const NonlocalGraph& g, const EdgeField& v) {
    return row_norm_reduce(g, v, [](double a, double b) { return a + b; });
}

double linf_norm(const NonlocalGraph& g, const EdgeField& v) {
    return row_norm_reduce(g, v, [](double a, double b) { return std::max(a, b); });
}

double estimate_operator_norm(const NonlocalGraph& g) {
    const std::size_t r = g.pixels();
    if (g.edges() == 0 || r == 0) return 0.0;

    std::vector<double> out_strength(r, 0.0), in_strength(r, 0.0);
    for (std::size_t e = 0; e < g.edges(); ++e) {
        out_strength[e / g.m()] += g.weights()[e];
        in_strength[g.targets()[e]] += g.weights()[e];
    }
    const double analytic = std::sqrt(2.0 * (*std::max_element(out_strength.begin(), out_strength.end()) +
                                             *std::max_element(in_strength.begin(), in_strength.end())));
    if (analytic == 0.0) return 0.0;

    // Power iteration on grad^T grad = -div grad, started from a fixed
    // pseudo-random vector so the estimate is reproducible.
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    Matrix x(r, 1);
    for (auto& v : x.data()) v = normal(rng);
    EdgeField grad(g.edges(), 1);
    Matrix div(r, 1);
    double rayleigh = 0.0;
    for (int it = 0; it < 50; ++it) {
        double n2 = 0.0;
        for (double v : x.data()) n2 += v * v;
        const double n = std::sqrt(n2);
        if (n == 0.0) break;
        for (auto& v : x.data()) v /= n;
        gradient(g, x, grad);
        double gn2 = 0.0;
        for (double v : grad.values) gn2 += v * v;
        rayleigh = gn2;  // ||grad x||^2 with ||x|| = 1
        divergence(g, grad, div);
        for (std::size_t i = 0; i < r; ++i) x(i, 0) = -div(i, 0);
    }
    return std::min(1.05 * std::sqrt(rayleigh), analytic);
}

void save_graph(const NonlocalGraph& g, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    const std::uint64_t header[2] = {g.pixels(), g.m()};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (std::size_t e = 0; e < g.edges(); ++e) {
        const std::uint64_t t = g.targets()[e];
        const double w = g.weights()[e];
        out.write(reinterpret_cast<const char*>(&t), sizeof(t));
        out.write(reinterpret_cast<const char*>(&w), sizeof(w));
    }
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

NonlocalGraph load_graph(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    const auto bytes = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    std::uint64_t header[2] = {0, 0};
    if (bytes < sizeof(header)) fail(ErrorKind::Format, "graph file too short: " + path.string());
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    const std::uint64_t r = header[0];
    const std::uint64_t m = header[1];
    constexpr std::uint64_t kRecord = sizeof(std::uint64_t) + sizeof(double);
    if (m != 0 && r > (bytes - sizeof(header)) / kRecord / m) {
        fail(ErrorKind::Format, "graph file length mismatch: " + path.string());
    }
    if (bytes != sizeof(header) + r * m * kRecord) {
        fail(ErrorKind::Format, "graph file length mismatch: " + path.string());
    }
    std::vector<std::uint32_t> targets(r * m);
    std::vector<double> weights(r * m);
    for (std::size_t e = 0; e < r * m; ++e) {
        std::uint64_t t = 0;
        double w = 0.0;
        in.read(reinterpret_cast<char*>(&t), sizeof(t));
        in.read(reinterpret_cast<char*>(&w), sizeof(w));
        if (t >= r) fail(ErrorKind::Format, "graph target out of range at edge " + std::to_string(e));
        targets[e] = static_cast<std::uint32_t>(t);
        weights[e] = w;
    }
    if (!in) fail(ErrorKind::Io, "read failed for " + path.string());
    try {
        return NonlocalGraph(r, m, std::move(targets), std::move(weights));
    } catch (const Error& e) {
        fail(ErrorKind::Format, std::string("invalid graph file: ") + e.what());
    }
}

}  // namespace nltv
