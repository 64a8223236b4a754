#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "te/extension.hpp"
#include "te/linalg.hpp"
#include "te/sketch.hpp"

namespace te::io {

enum class PointFormat { Csv, Bin };

/// .csv -> Csv, .bin -> Bin; anything else is a Format error unless an
/// explicit format is given.
PointFormat detect_format(const std::filesystem::path& path, std::optional<PointFormat> override_format = {});
PointFormat parse_format(const std::string& name);

// CSV: one point per row, comma separated decimals. Empty lines and lines
// starting with '#' are skipped. Values are written in shortest round-trip
// form, so write -> read reproduces every bit.
Matrix read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, const Matrix& points);

// Binary: 16-byte header {"TEPT", u32 n, u32 d, u32 reserved = 0}, then n*d
// doubles row-major. All little-endian.
Matrix read_points_bin(const std::filesystem::path& path);
void write_points_bin(const std::filesystem::path& path, const Matrix& points);

Matrix read_points(const std::filesystem::path& path, PointFormat format);
void write_points(const std::filesystem::path& path, const Matrix& points, PointFormat format);

// Sketch file: one line of JSON {magic "TESK", m, d, distribution, seed, C,
// payload_bytes} terminated by '\n', then m*d little-endian doubles.
void write_sketch(const std::filesystem::path& path, const SketchMatrix& Pi, double C);
SketchMatrix read_sketch(const std::filesystem::path& path, double* C_out = nullptr);

/// A built embedder on disk: a directory holding manifest.json, points.bin,
/// embedded.bin and either sketch.tesk or basis.bin.
struct Bundle {
    nlohmann::json manifest;
    std::unique_ptr<TerminalMap> map;
};

void write_bundle(const std::filesystem::path& dir, const TerminalMap& map, const nlohmann::json& config);
Bundle read_bundle(const std::filesystem::path& dir, const SolverConfig* solver_override = nullptr);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace te::io
