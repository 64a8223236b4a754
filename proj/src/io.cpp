#include "te/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "te/error.hpp"

namespace te::io {

namespace fs = std::filesystem;

namespace {

constexpr char kPointMagic[4] = {'T', 'E', 'P', 'T'};
constexpr const char* kSketchMagic = "TESK";

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
    return v;
}

double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::string encode_doubles(const std::vector<double>& values) {
    std::string out;
    out.reserve(values.size() * 8);
    for (double v : values) put_f64(out, v);
    return out;
}

std::vector<double> decode_doubles(const std::string& bytes, std::size_t offset, std::size_t count,
                                   const fs::path& path) {
    if (bytes.size() != offset + count * 8) {
        throw Error(ErrorKind::Format, path.string() + ": expected " + std::to_string(offset + count * 8) +
                                           " bytes, found " + std::to_string(bytes.size()));
    }
    std::vector<double> out(count);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
    for (std::size_t i = 0; i < count; ++i) out[i] = get_f64(p + 8 * i);
    return out;
}

}  // namespace

PointFormat detect_format(const fs::path& path, std::optional<PointFormat> override_format) {
    if (override_format) return *override_format;
    const auto ext = path.extension().string();
    if (ext == ".csv") return PointFormat::Csv;
    if (ext == ".bin") return PointFormat::Bin;
    throw Error(ErrorKind::Format, "cannot infer point format from '" + path.string() + "' (use .csv or .bin)");
}

PointFormat parse_format(const std::string& name) {
    if (name == "csv") return PointFormat::Csv;
    if (name == "bin") return PointFormat::Bin;
    throw Error(ErrorKind::InvalidArgument, "unknown format '" + name + "'");
}

Matrix read_points_csv(const fs::path& path) {
    const std::string text = slurp(path);
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::size_t count = 0, start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            const std::string field = trim(std::string_view(body).substr(start, comma - start));
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
                throw Error(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": bad value '" +
                                                   field + "' in column " + std::to_string(count + 1));
            }
            values.push_back(v);
            ++count;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw Error(ErrorKind::DimensionMismatch, path.string() + ":" + std::to_string(line_no) + ": row has " +
                                                          std::to_string(count) + " values, expected " +
                                                          std::to_string(cols));
        }
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

void write_points_csv(const fs::path& path, const Matrix& points) {
    std::string out;
    for (std::size_t r = 0; r < points.rows(); ++r) {
        for (std::size_t c = 0; c < points.cols(); ++c) {
            if (c) out.push_back(',');
            append_double(out, points(r, c));
        }
        out.push_back('\n');
    }
    spit(path, out);
}

Matrix read_points_bin(const fs::path& path) {
    const std::string bytes = slurp(path);
    if (bytes.size() < 16) {
        throw Error(ErrorKind::Format, path.string() + ": file shorter than the 16-byte header");
    }
    if (std::memcmp(bytes.data(), kPointMagic, 4) != 0) {
        throw Error(ErrorKind::Format, path.string() + ": bad magic at offset 0 (expected TEPT)");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = get_u32(p + 4), d = get_u32(p + 8);
    return Matrix(n, d, decode_doubles(bytes, 16, n * d, path));
}

void write_points_bin(const fs::path& path, const Matrix& points) {
    std::string out(kPointMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(points.rows()));
    put_u32(out, static_cast<std::uint32_t>(points.cols()));
    put_u32(out, 0);
    out += encode_doubles(points.data());
    spit(path, out);
}

Matrix read_points(const fs::path& path, PointFormat format) {
    return format == PointFormat::Csv ? read_points_csv(path) : read_points_bin(path);
}

void write_points(const fs::path& path, const Matrix& points, PointFormat format) {
    if (format == PointFormat::Csv) {
        write_points_csv(path, points);
    } else {
        write_points_bin(path, points);
    }
}

void write_sketch(const fs::path& path, const SketchMatrix& Pi, double C) {
    nlohmann::json header = {{"magic", kSketchMagic},
                             {"m", Pi.rows()},
                             {"d", Pi.cols()},
                             {"distribution", std::string(to_string(Pi.distribution()))},
                             {"seed", Pi.seed()},
                             {"C", C},
                             {"payload_bytes", Pi.rows() * Pi.cols() * 8}};
    spit(path, header.dump() + "\n" + encode_doubles(Pi.entries().data()));
}

SketchMatrix read_sketch(const fs::path& path, double* C_out) {
    const std::string bytes = slurp(path);
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw Error(ErrorKind::Format, path.string() + ": missing sketch header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(0, nl));
        if (header.at("magic") != kSketchMagic) throw Error(ErrorKind::Format, path.string() + ": bad sketch magic");
        const std::size_t m = header.at("m"), d = header.at("d");
        auto entries = decode_doubles(bytes, nl + 1, m * d, path);
        if (C_out) *C_out = header.at("C");
        return SketchMatrix::from_entries(Matrix(m, d, std::move(entries)),
                                          parse_distribution(header.at("distribution").get<std::string>()),
                                          header.at("seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, path.string() + ": bad sketch header: " + e.what());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) { spit(path, j.dump(2) + "\n"); }

void write_bundle(const fs::path& dir, const TerminalMap& map, const nlohmann::json& config) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create bundle directory '" + dir.string() + "': " + ec.message());

    const PointSet& X = map.points();
    Matrix embedded(X.size(), map.output_dim());
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto img = map.terminal_image(i);
        std::copy(img.begin(), img.end(), embedded.row(i).begin());
    }
    write_points_bin(dir / "points.bin", X.matrix());
    write_points_bin(dir / "embedded.bin", embedded);

    nlohmann::json manifest = {{"format", "terminal-embedding-bundle"},
                               {"version", 1},
                               {"mode", std::string(map.name())},
                               {"n", X.size()},
                               {"d", X.dim()},
                               {"output_dim", map.output_dim()},
                               {"config", config}};
    if (const auto* sk = dynamic_cast<const TerminalEmbedder*>(&map)) {
        manifest["m"] = sk->sketch().rows();
        manifest["epsilon"] = sk->epsilon();
        write_sketch(dir / "sketch.tesk", sk->sketch(), config.value("C", 0.0));
    } else if (const auto* ex = dynamic_cast<const ExactTerminalMap*>(&map)) {
        manifest["rank"] = ex->embedding().rank();
        write_points_bin(dir / "basis.bin", ex->embedding().basis());
    } else {
        throw Error(ErrorKind::InvalidArgument, "only sketch and exact_small maps can be bundled");
    }
    write_json(dir / "manifest.json", manifest);
}

Bundle read_bundle(const fs::path& dir, const SolverConfig* solver_override) {
    Bundle b;
    try {
        b.manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, (dir / "manifest.json").string() + ": " + e.what());
    }
    PointSet X = build_point_set(read_points_bin(dir / "points.bin"));
    const Matrix embedded = read_points_bin(dir / "embedded.bin");
    const std::string mode = b.manifest.value("mode", "");
    if (mode == "sketch") {
        SolverConfig solver;
        const auto& cfg = b.manifest.at("config");
        if (cfg.contains("solver")) {
            solver.max_iters = cfg["solver"].value("max_iters", solver.max_iters);
            solver.tol = cfg["solver"].value("tol", solver.tol);
            solver.step_rule = parse_step_rule(cfg["solver"].value("step_rule", std::string("polyak0")));
        }
        if (solver_override) solver = *solver_override;
        auto embedder = std::make_unique<TerminalEmbedder>(std::move(X), read_sketch(dir / "sketch.tesk"),
                                                           b.manifest.at("epsilon").get<double>(), solver);
        for (std::size_t i = 0; i < embedder->points().size(); ++i) {
            const auto img = embedder->terminal_image(i);
            if (!std::equal(img.begin(), img.end(), embedded.row(i).begin())) {
                throw Error(ErrorKind::Format, "embedded.bin does not match the sketch applied to points.bin");
            }
        }
        b.map = std::move(embedder);
    } else if (mode == "exact_small") {
        Vector origin(X[0].begin(), X[0].end());
        auto map = ExactSmallEmbedding::from_parts(std::move(origin), read_points_bin(dir / "basis.bin"));
        b.map = std::make_unique<ExactTerminalMap>(std::move(X), std::move(map));
    } else {
        throw Error(ErrorKind::Format, "unknown bundle mode '" + mode + "'");
    }
    return b;
}

}  // namespace te::io
