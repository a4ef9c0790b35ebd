#pragma once

#include <cstdint>

#include "nltv/common.hpp"
#include "nltv/hsi.hpp"

namespace nltv {

// Synthetic scene under the Generalized Bilinear Mixing Model
//   y = sum_i a_i e_i + sum_{i<j} gamma_ij a_i a_j (e_i .* e_j) + n.
struct GbmConfig {
    std::size_t p = 5;
    std::size_t bands = 162;
    std::size_t rows = 200;
    std::size_t cols = 200;
    double snr_db = 30.0;
    double smoothness = 20.0;    // Gaussian-field length scale, pixels
    // Temperature applied to the standardised fields before they are shifted,
    // clamped and normalised onto the simplex; smaller gives purer pixels.
    double mixing_scale = 0.5;
    // Endmembers are unit reflectance; the mixed cube is multiplied by this.
    double reflectance_scale = 50000.0;
    std::uint64_t gamma_seed = 1;
    std::uint64_t field_seed = 2;
    std::uint64_t noise_seed = 3;
    std::uint64_t endmember_seed = 4;
    bool add_noise = true;

    void validate() const;
};

// Maps p fields (r x p, one column per endmember) to row-stochastic
// abundances: per pixel, fields / mixing_scale are shifted by a common
// threshold, clamped at zero and normalised to sum one.
Matrix abundances_from_fields(const Matrix& fields, double mixing_scale);

// Sum of p independent Gaussian random fields: white noise convolved with an
// isotropic Gaussian kernel, standardised per field.
Matrix gaussian_fields(const GbmConfig& cfg);

// r x p row-stochastic abundance matrix.
Matrix generate_abundances(const GbmConfig& cfg);

// p x bands smooth spectra in unit reflectance (peaks in [0.4, 0.9]) built
// from random Gaussian bumps.
Matrix default_endmembers(const GbmConfig& cfg);

// gamma_ij ~ U[0,1] for i < j, stored symmetric with a zero diagonal.
Matrix draw_gammas(std::size_t p, std::uint64_t seed);

// Noise-free GBM spectra for every abundance row.
Matrix mix_gbm_clean(const Matrix& abundances, const Matrix& endmembers, const Matrix& gammas);

// Full GBM mixing, scaled by reflectance_scale, with white Gaussian noise
// scaled to the configured SNR.
HsiCube mix_gbm(const Matrix& abundances, const Matrix& endmembers, const GbmConfig& cfg);

// Argmax abundance per pixel, ties to the lowest index.
GroundTruth synth_ground_truth(const Matrix& abundances, std::size_t rows, std::size_t cols);

// 10 log10(||signal||^2 / ||noise||^2)
double measured_snr_db(const HsiCube& noisy, const Matrix& clean);

struct SyntheticScene {
    HsiCube cube;
    GroundTruth truth;
    Matrix endmembers;
    Matrix abundances;
};

// endmembers == nullptr selects default_endmembers(cfg).
SyntheticScene generate_scene(const GbmConfig& cfg, const Matrix* endmembers = nullptr);

}  // namespace nltv
