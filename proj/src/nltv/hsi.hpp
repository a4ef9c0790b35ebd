#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nltv/common.hpp"

namespace nltv {

// Hyperspectral cube stored band-interleaved-by-pixel: the spectrum of
// pixel i occupies data[i*bands, (i+1)*bands). Pixels are row-major.
class HsiCube {
public:
    HsiCube() = default;
    HsiCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<float> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t pixels() const noexcept { return rows_ * cols_; }

    std::span<const float> spectrum(std::size_t i) const {
        return {data_.data() + i * bands_, bands_};
    }
    std::span<float> spectrum(std::size_t i) { return {data_.data() + i * bands_, bands_}; }

    const std::vector<float>& data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t bands_ = 0;
    std::vector<float> data_;
};

// Ground-truth class per pixel; std::nullopt marks an unannotated pixel
// (written as -1 in CSV files).
struct GroundTruth {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::optional<std::uint32_t>> labels;

    // One past the largest class id present (0 if nothing is labeled).
    std::size_t class_count() const;
};

// Hard clustering result: one cluster index in [0, k) per pixel.
struct LabelMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> assignment;

    LabelMap() = default;
    LabelMap(std::size_t rows, std::size_t cols, std::size_t k, std::vector<std::uint32_t> assignment);
};

struct CubeHeader {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t bands = 0;
};

CubeHeader parse_cube_header(const std::string& json_text);
std::string format_cube_header(const CubeHeader& header);

// Header is the JSON sidecar {"rows","cols","bands","dtype":"f32le","interleave":"bip"}.
HsiCube load_cube(const std::filesystem::path& data_path, const std::filesystem::path& header_path);
void save_cube(const HsiCube& cube, const std::filesystem::path& data_path,
               const std::filesystem::path& header_path);

// expected_pixels == 0 disables the length check.
GroundTruth load_ground_truth(const std::filesystem::path& path, std::size_t expected_pixels = 0);
GroundTruth parse_ground_truth(const std::string& csv_text, std::size_t expected_pixels = 0);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

std::string label_map_csv(const LabelMap& map);
// k is inferred as max label + 1 unless given.
LabelMap load_label_map(const std::filesystem::path& path, std::size_t k = 0);

// Fixed palette used for rendering; entry i colours cluster i (wraps at 256).
std::array<std::uint8_t, 3> palette_color(std::size_t index);

void save_label_png(const LabelMap& map, const std::filesystem::path& path);
void save_label_csv(const LabelMap& map, const std::filesystem::path& path);
// Writes the CSV of indices and the indexed-colour PNG.
void save_label_map(const LabelMap& map, const std::filesystem::path& csv_path,
                    const std::filesystem::path& png_path);

Matrix load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace nltv
