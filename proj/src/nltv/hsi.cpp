#include "nltv/hsi.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

namespace nltv {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "cube payloads are read as native little-endian float32");

HsiCube::HsiCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<float> data)
    : rows_(rows), cols_(cols), bands_(bands), data_(std::move(data)) {
    require(rows > 0 && cols > 0 && bands > 0, "cube dimensions must be positive");
    if (data_.size() != rows * cols * bands) {
        fail(ErrorKind::Format, "length mismatch: expected " + std::to_string(rows * cols * bands) +
                                    " values, got " + std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            fail(ErrorKind::Format, "non-finite value at index " + std::to_string(i));
        }
    }
}

std::size_t GroundTruth::class_count() const {
    std::size_t n = 0;
    for (const auto& l : labels) {
        if (l) n = std::max<std::size_t>(n, *l + 1);
    }
    return n;
}

LabelMap::LabelMap(std::size_t rows_, std::size_t cols_, std::size_t k_,
                   std::vector<std::uint32_t> assignment_)
    : rows(rows_), cols(cols_), k(k_), assignment(std::move(assignment_)) {
    require(assignment.size() == rows * cols, "label map length must equal rows*cols");
    for (auto a : assignment) require(a < k, "label index out of range");
}

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

// Splits CSV text into rows of trimmed cells. Blank lines are skipped.
std::vector<std::vector<std::string_view>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string_view>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        std::vector<std::string_view> cells;
        std::size_t c = 0;
        while (true) {
            auto comma = line.find(',', c);
            auto cell = line.substr(c, comma == std::string_view::npos ? line.size() - c : comma - c);
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
            cells.push_back(cell);
            if (comma == std::string_view::npos) break;
            c = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::string cell_error(std::size_t r, std::size_t c, std::string_view cell) {
    return "parse error at (row " + std::to_string(r) + ", col " + std::to_string(c) + "): '" +
           std::string(cell) + "'";
}

long long parse_int_cell(std::string_view cell, std::size_t r, std::size_t c) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        fail(ErrorKind::Format, cell_error(r, c, cell));
    }
    return v;
}

double parse_double_cell(std::string_view cell, std::size_t r, std::size_t c) {
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        fail(ErrorKind::Format, cell_error(r, c, cell));
    }
    return v;
}

}  // namespace

CubeHeader parse_cube_header(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("invalid cube header: ") + e.what());
    }
    CubeHeader h;
    try {
        h.rows = j.at("rows").get<std::size_t>();
        h.cols = j.at("cols").get<std::size_t>();
        h.bands = j.at("bands").get<std::size_t>();
        if (j.contains("dtype") && j["dtype"].get<std::string>() != "f32le") {
            fail(ErrorKind::Format, "unsupported dtype " + j["dtype"].get<std::string>());
        }
        if (j.contains("interleave") && j["interleave"].get<std::string>() != "bip") {
            fail(ErrorKind::Format, "unsupported interleave " + j["interleave"].get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("invalid cube header: ") + e.what());
    }
    if (h.rows == 0 || h.cols == 0 || h.bands == 0) {
        fail(ErrorKind::Format, "cube header dimensions must be positive");
    }
    return h;
}

std::string format_cube_header(const CubeHeader& h) {
    nlohmann::ordered_json j;
    j["rows"] = h.rows;
    j["cols"] = h.cols;
    j["bands"] = h.bands;
    j["dtype"] = "f32le";
    j["interleave"] = "bip";
    return j.dump(2) + "\n";
}

HsiCube load_cube(const fs::path& data_path, const fs::path& header_path) {
    const auto header = parse_cube_header(read_text(header_path));
    std::ifstream in(data_path, std::ios::binary | std::ios::ate);
    if (!in) fail(ErrorKind::Io, "cannot open " + data_path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    const std::size_t expected = header.rows * header.cols * header.bands;
    if (bytes % sizeof(float) != 0 || bytes / sizeof(float) != expected) {
        fail(ErrorKind::Format, "length mismatch: header declares " + std::to_string(expected) +
                                    " floats, file holds " + std::to_string(bytes / sizeof(float)) +
                                    (bytes % sizeof(float) ? " (plus trailing bytes)" : ""));
    }
    std::vector<float> data(expected);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) fail(ErrorKind::Io, "read failed for " + data_path.string());
    return HsiCube(header.rows, header.cols, header.bands, std::move(data));
}

void save_cube(const HsiCube& cube, const fs::path& data_path, const fs::path& header_path) {
    {
        std::ofstream out(data_path, std::ios::binary);
        if (!out) fail(ErrorKind::Io, "cannot write " + data_path.string());
        out.write(reinterpret_cast<const char*>(cube.data().data()),
                  static_cast<std::streamsize>(cube.data().size() * sizeof(float)));
        if (!out) fail(ErrorKind::Io, "write failed for " + data_path.string());
    }
    write_text(header_path, format_cube_header({cube.rows(), cube.cols(), cube.bands()}));
}

GroundTruth parse_ground_truth(const std::string& csv_text, std::size_t expected_pixels) {
    const auto rows = split_csv(csv_text);
    GroundTruth gt;
    gt.rows = rows.size();
    gt.cols = rows.empty() ? 0 : rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != gt.cols) {
            fail(ErrorKind::Format, "ragged ground truth: row " + std::to_string(r) + " has " +
                                        std::to_string(rows[r].size()) + " cells, expected " +
                                        std::to_string(gt.cols));
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto v = parse_int_cell(rows[r][c], r, c);
            if (v == -1) {
                gt.labels.emplace_back(std::nullopt);
            } else if (v >= 0) {
                gt.labels.emplace_back(static_cast<std::uint32_t>(v));
            } else {
                fail(ErrorKind::Format, cell_error(r, c, rows[r][c]) + " (negative class)");
            }
        }
    }
    if (expected_pixels != 0 && gt.labels.size() != expected_pixels) {
        fail(ErrorKind::Format, "length mismatch: ground truth has " + std::to_string(gt.labels.size()) +
                                    " entries, expected " + std::to_string(expected_pixels));
    }
    return gt;
}

GroundTruth load_ground_truth(const fs::path& path, std::size_t expected_pixels) {
    return parse_ground_truth(read_text(path), expected_pixels);
}

void save_ground_truth(const GroundTruth& gt, const fs::path& path) {
    require(gt.labels.size() == gt.rows * gt.cols, "ground truth shape mismatch");
    std::string out;
    for (std::size_t r = 0; r < gt.rows; ++r) {
        for (std::size_t c = 0; c < gt.cols; ++c) {
            const auto& l = gt.labels[r * gt.cols + c];
            if (c) out += ',';
            out += l ? std::to_string(*l) : "-1";
        }
        out += '\n';
    }
    write_text(path, out);
}

std::string label_map_csv(const LabelMap& map) {
    std::string out;
    out.reserve(map.assignment.size() * 3);
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            if (c) out += ',';
            out += std::to_string(map.assignment[r * map.cols + c]);
        }
        out += '\n';
    }
    return out;
}

LabelMap load_label_map(const fs::path& path, std::size_t k) {
    const auto gt = load_ground_truth(path);
    if (gt.labels.empty()) fail(ErrorKind::Format, "empty label map " + path.string());
    std::vector<std::uint32_t> a;
    a.reserve(gt.labels.size());
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        if (!gt.labels[i]) fail(ErrorKind::Format, "label map contains unlabeled pixel " + std::to_string(i));
        a.push_back(*gt.labels[i]);
    }
    const std::size_t inferred = gt.class_count();
    if (k == 0) k = inferred;
    if (inferred > k) fail(ErrorKind::Format, "label index exceeds k");
    return LabelMap(gt.rows, gt.cols, k, std::move(a));
}

std::array<std::uint8_t, 3> palette_color(std::size_t index) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 12> kBase{{
        {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
        {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
        {188, 189, 34}, {23, 190, 207}, {0, 0, 0}, {255, 255, 255},
    }};
    index %= 256;
    if (index < kBase.size()) return kBase[index];
    // Beyond the base set: fixed integer hash, no RNG state involved.
    std::uint32_t h = static_cast<std::uint32_t>(index) * 2654435761u;
    h ^= h >> 15;
    h *= 2246822519u;
    h ^= h >> 13;
    return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8),
            static_cast<std::uint8_t>(h >> 16)};
}

void save_label_png(const LabelMap& map, const fs::path& path) {
    if (map.assignment.empty()) fail(ErrorKind::InvalidArgument, "empty label map");
    require(map.assignment.size() == map.rows * map.cols, "label map shape mismatch");
    require(map.k <= 256, "indexed PNG supports at most 256 clusters");

    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) fail(ErrorKind::Io, "cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(ErrorKind::Io, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(ErrorKind::Io, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::Io, "libpng error while writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(map.cols), static_cast<png_uint_32>(map.rows), 8,
                 PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    const std::size_t entries = std::max<std::size_t>(map.k, 1);
    std::vector<png_color> palette(entries);
    for (std::size_t i = 0; i < entries; ++i) {
        const auto c = palette_color(i);
        palette[i] = {c[0], c[1], c[2]};
    }
    png_set_PLTE(png, info, palette.data(), static_cast<int>(entries));
    png_write_info(png, info);
    std::vector<png_byte> line(map.cols);
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            line[c] = static_cast<png_byte>(map.assignment[r * map.cols + c]);
        }
        png_write_row(png, line.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_label_csv(const LabelMap& map, const fs::path& path) {
    if (map.assignment.empty()) fail(ErrorKind::InvalidArgument, "empty label map");
    write_text(path, label_map_csv(map));
}

void save_label_map(const LabelMap& map, const fs::path& csv_path, const fs::path& png_path) {
    save_label_csv(map, csv_path);
    save_label_png(map, png_path);
}

Matrix load_matrix_csv(const fs::path& path) {
    const auto text = read_text(path);
    const auto rows = split_csv(text);
    if (rows.empty()) fail(ErrorKind::Format, "empty matrix file " + path.string());
    const std::size_t cols = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) fail(ErrorKind::Format, "ragged matrix row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c) data.push_back(parse_double_cell(rows[r][c], r, c));
    }
    return Matrix(rows.size(), cols, std::move(data));
}

void save_matrix_csv(const Matrix& m, const fs::path& path) {
    std::string out;
    char buf[64];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            // Shortest round-trip representation.
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(r, c));
            out.append(buf, ptr);
        }
        out += '\n';
    }
    write_text(path, out);
}

}  // namespace nltv
