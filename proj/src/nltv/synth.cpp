#include "nltv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nltv/simplex.hpp"

namespace nltv {

void GbmConfig::validate() const {
    require(p >= 2, "GBM config: p must be >= 2");
    require(bands >= 1 && rows >= 1 && cols >= 1, "GBM config: dimensions must be positive");
    require(std::isfinite(snr_db), "GBM config: snr_db must be finite");
    require(std::isfinite(smoothness) && smoothness >= 0.0, "GBM config: smoothness must be >= 0");
    require(std::isfinite(mixing_scale) && mixing_scale > 0.0, "GBM config: mixing_scale must be > 0");
    require(std::isfinite(reflectance_scale) && reflectance_scale > 0.0,
            "GBM config: reflectance_scale must be > 0");
}

Matrix abundances_from_fields(const Matrix& fields, double mixing_scale) {
    require(mixing_scale > 0.0, "mixing_scale must be > 0");
    Matrix a(fields.rows(), fields.cols());
    std::vector<double> z(fields.cols());
    for (std::size_t i = 0; i < fields.rows(); ++i) {
        const auto f = fields.row(i);
        for (std::size_t q = 0; q < z.size(); ++q) z[q] = f[q] / mixing_scale;
        proj_simplex(z, a.row(i));
    }
    return a;
}

namespace {

// Mirror-boundary 1-D Gaussian smoothing along one axis of a rows x cols grid.
void smooth_axis(std::vector<double>& grid, std::size_t rows, std::size_t cols, const std::vector<double>& kernel,
                 bool along_cols) {
    const auto radius = static_cast<long>(kernel.size() / 2);
    std::vector<double> out(grid.size(), 0.0);
    const long len = static_cast<long>(along_cols ? cols : rows);
    auto mirror = [len](long x) {
        if (len == 1) return 0L;
        const long period = 2 * (len - 1);
        x %= period;
        if (x < 0) x += period;
        return x < len ? x : period - x;
    };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            const long pos = static_cast<long>(along_cols ? c : r);
            for (long t = -radius; t <= radius; ++t) {
                const long q = mirror(pos + t);
                const std::size_t idx = along_cols ? r * cols + static_cast<std::size_t>(q)
                                                   : static_cast<std::size_t>(q) * cols + c;
                acc += kernel[static_cast<std::size_t>(t + radius)] * grid[idx];
            }
            out[r * cols + c] = acc;
        }
    }
    grid.swap(out);
}

}  // namespace

Matrix gaussian_fields(const GbmConfig& cfg) {
    cfg.validate();
    const std::size_t r = cfg.rows * cfg.cols;
    std::mt19937_64 rng(cfg.field_seed);
    std::normal_distribution<double> normal;

    std::vector<double> kernel{1.0};
    if (cfg.smoothness > 0.0) {
        const auto radius = static_cast<long>(std::ceil(3.0 * cfg.smoothness));
        kernel.clear();
        double total = 0.0;
        for (long t = -radius; t <= radius; ++t) {
            const double v = std::exp(-static_cast<double>(t * t) / (2.0 * cfg.smoothness * cfg.smoothness));
            kernel.push_back(v);
            total += v;
        }
        for (auto& v : kernel) v /= total;
    }

    Matrix fields(r, cfg.p);
    std::vector<double> grid(r);
    for (std::size_t q = 0; q < cfg.p; ++q) {
        for (auto& v : grid) v = normal(rng);
        if (kernel.size() > 1) {
            smooth_axis(grid, cfg.rows, cfg.cols, kernel, true);
            smooth_axis(grid, cfg.rows, cfg.cols, kernel, false);
        }
        double mean = 0.0;
        for (double v : grid) mean += v;
        mean /= static_cast<double>(r);
        double var = 0.0;
        for (double v : grid) var += (v - mean) * (v - mean);
        var /= static_cast<double>(r);
        const double inv_sd = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
        for (std::size_t i = 0; i < r; ++i) fields(i, q) = (grid[i] - mean) * inv_sd;
    }
    return fields;
}

Matrix generate_abundances(const GbmConfig& cfg) {
    return abundances_from_fields(gaussian_fields(cfg), cfg.mixing_scale);
}

Matrix default_endmembers(const GbmConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.endmember_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix e(cfg.p, cfg.bands);
    for (std::size_t q = 0; q < cfg.p; ++q) {
        const double base = 0.05 + 0.15 * unit(rng);
        const int bumps = 3 + static_cast<int>(4 * unit(rng));
        std::vector<double> centre(bumps), width(bumps), height(bumps);
        for (int t = 0; t < bumps; ++t) {
            centre[t] = unit(rng);
            width[t] = 0.03 + 0.12 * unit(rng);
            height[t] = 0.1 + 0.5 * unit(rng);
        }
        double peak = 0.0;
        for (std::size_t b = 0; b < cfg.bands; ++b) {
            const double x = cfg.bands > 1 ? static_cast<double>(b) / static_cast<double>(cfg.bands - 1) : 0.0;
            double v = base;
            for (int t = 0; t < bumps; ++t) {
                const double d = (x - centre[t]) / width[t];
                v += height[t] * std::exp(-0.5 * d * d);
            }
            e(q, b) = v;
            peak = std::max(peak, v);
        }
        // Peak reflectance in [0.4, 0.9].
        const double target = 0.4 + 0.5 * unit(rng);
        for (std::size_t b = 0; b < cfg.bands; ++b) e(q, b) *= target / peak;
    }
    return e;
}

Matrix draw_gammas(std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix g(p, p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) g(i, j) = g(j, i) = unit(rng);
    }
    return g;
}

Matrix mix_gbm_clean(const Matrix& abundances, const Matrix& endmembers, const Matrix& gammas) {
    const std::size_t p = endmembers.rows();
    const std::size_t b = endmembers.cols();
    require(abundances.cols() == p, "mix_gbm: abundance columns must equal endmember count");
    require(gammas.rows() == p && gammas.cols() == p, "mix_gbm: gamma matrix must be p x p");
    for (double v : endmembers.data()) require(v >= 0.0 && std::isfinite(v), "mix_gbm: endmembers must be nonnegative");

    // Precompute the Hadamard products e_i .* e_j for i < j.
    std::vector<std::vector<double>> hadamard;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            std::vector<double> h(b);
            for (std::size_t q = 0; q < b; ++q) h[q] = endmembers(i, q) * endmembers(j, q);
            hadamard.push_back(std::move(h));
        }
    }
    Matrix y(abundances.rows(), b, 0.0);
    for (std::size_t n = 0; n < abundances.rows(); ++n) {
        const auto a = abundances.row(n);
        auto out = y.row(n);
        for (std::size_t i = 0; i < p; ++i) {
            if (a[i] == 0.0) continue;
            for (std::size_t q = 0; q < b; ++q) out[q] += a[i] * endmembers(i, q);
        }
        std::size_t pair = 0;
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j, ++pair) {
                const double coef = gammas(i, j) * a[i] * a[j];
                if (coef == 0.0) continue;
                const auto& h = hadamard[pair];
                for (std::size_t q = 0; q < b; ++q) out[q] += coef * h[q];
            }
        }
    }
    return y;
}

HsiCube mix_gbm(const Matrix& abundances, const Matrix& endmembers, const GbmConfig& cfg) {
    cfg.validate();
    require(abundances.rows() == cfg.rows * cfg.cols, "mix_gbm: abundance rows must equal rows*cols");
    require(endmembers.cols() == cfg.bands, "mix_gbm: endmember band count mismatch");
    // Mixing happens in unit reflectance; the bilinear term is only meaningful there.
    Matrix clean = mix_gbm_clean(abundances, endmembers, draw_gammas(endmembers.rows(), cfg.gamma_seed));
    for (auto& v : clean.data()) v *= cfg.reflectance_scale;

    std::vector<double> noisy(clean.data());
    if (cfg.add_noise) {
        std::mt19937_64 rng(cfg.noise_seed);
        std::normal_distribution<double> normal;
        std::vector<double> noise(noisy.size());
        double signal2 = 0.0, noise2 = 0.0;
        for (std::size_t n = 0; n < noise.size(); ++n) {
            noise[n] = normal(rng);
            noise2 += noise[n] * noise[n];
            signal2 += clean.data()[n] * clean.data()[n];
        }
        // Scale the realised noise so the image-wide SNR is exactly snr_db.
        const double scale = noise2 > 0.0 ? std::sqrt(signal2 / (noise2 * std::pow(10.0, cfg.snr_db / 10.0))) : 0.0;
        for (std::size_t n = 0; n < noise.size(); ++n) noisy[n] += scale * noise[n];
    }
    std::vector<float> data(noisy.size());
    for (std::size_t n = 0; n < noisy.size(); ++n) data[n] = static_cast<float>(std::max(0.0, noisy[n]));
    return HsiCube(cfg.rows, cfg.cols, cfg.bands, std::move(data));
}

GroundTruth synth_ground_truth(const Matrix& abundances, std::size_t rows, std::size_t cols) {
    require(abundances.rows() == rows * cols, "synth_ground_truth: abundance rows must equal rows*cols");
    GroundTruth gt;
    gt.rows = rows;
    gt.cols = cols;
    gt.labels.reserve(abundances.rows());
    for (std::size_t i = 0; i < abundances.rows(); ++i) {
        const auto a = abundances.row(i);
        gt.labels.emplace_back(static_cast<std::uint32_t>(std::max_element(a.begin(), a.end()) - a.begin()));
    }
    return gt;
}

double measured_snr_db(const HsiCube& noisy, const Matrix& clean) {
    require(clean.data().size() == noisy.data().size(), "measured_snr_db: size mismatch");
    double s2 = 0.0, n2 = 0.0;
    for (std::size_t n = 0; n < clean.data().size(); ++n) {
        const double s = clean.data()[n];
        const double d = static_cast<double>(noisy.data()[n]) - s;
        s2 += s * s;
        n2 += d * d;
    }
    return 10.0 * std::log10(s2 / n2);
}

SyntheticScene generate_scene(const GbmConfig& cfg, const Matrix* endmembers) {
    cfg.validate();
    SyntheticScene s;
    s.endmembers = endmembers ? *endmembers : default_endmembers(cfg);
    require(s.endmembers.rows() == cfg.p, "endmember count must equal p");
    s.abundances = generate_abundances(cfg);
    s.cube = mix_gbm(s.abundances, s.endmembers, cfg);
    s.truth = synth_ground_truth(s.abundances, cfg.rows, cfg.cols);
    return s;
}

}  // namespace nltv
