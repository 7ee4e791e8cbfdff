#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <boost/crc.hpp>
#include <json.hpp>

#include "swe/error.hpp"
#include "swe/grid.hpp"

namespace swe::runner {

namespace fs = std::filesystem;

inline const char* kToolVersion = "swe-clt 1.0.0";

/// Round-trip decimal form of a double.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::uint32_t crc32_of(const std::string& bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct OutputFile {
    std::string name;
    std::uint32_t crc32 = 0;
    std::size_t bytes = 0;
};

/// Writes `<name>.partial` then renames, so a crash never leaves a truncated file under the final name.
inline OutputFile write_atomic(const fs::path& dir, const std::string& name, const std::string& bytes) {
    fs::create_directories(dir);
    const fs::path final_path = dir / name;
    const fs::path partial = dir / (name + ".partial");
    {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + partial.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + partial.string());
    }
    fs::rename(partial, final_path);
    return {name, crc32_of(bytes), bytes.size()};
}

/// Minimal CSV builder; numbers always go through fmt().
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    template <class... Cells>
    void row(const Cells&... cells) {
        static_assert(sizeof...(Cells) > 0);
        if (sizeof...(Cells) != columns_) throw std::logic_error("csv row width mismatch");
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }
    static std::string cell(double x) { return fmt(x); }
    static std::string cell(float x) { return fmt(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
    static std::string cell(I i) { return std::to_string(i); }

    std::size_t columns_;
    std::ostringstream out_;
};

/// .field layout: int64 N, float64 L, float64 t (little endian), then N^3 float64 in row-major order.
inline std::string encode_field(const TorusGrid& g, double t, const RealField& u) {
    static_assert(sizeof(double) == 8);
    if (u.size() != g.num_points()) throw GridMismatch("field size does not match grid");
    std::string bytes;
    bytes.reserve(24 + 8 * u.size());
    auto put = [&](const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        bytes.append(reinterpret_cast<const char*>(c), n);
    };
    const std::int64_t n = g.n();
    const double L = g.length();
    put(&n, 8);
    put(&L, 8);
    put(&t, 8);
    put(u.data(), 8 * u.size());
    return bytes;
}

struct DecodedField {
    std::int64_t n = 0;
    double L = 0.0;
    double t = 0.0;
    std::vector<double> values;
};

inline DecodedField decode_field(const std::string& bytes) {
    if (bytes.size() < 24) throw std::runtime_error(".field file too short");
    DecodedField f;
    std::memcpy(&f.n, bytes.data(), 8);
    std::memcpy(&f.L, bytes.data() + 8, 8);
    std::memcpy(&f.t, bytes.data() + 16, 8);
    const std::size_t count = static_cast<std::size_t>(f.n) * f.n * f.n;
    if (bytes.size() != 24 + 8 * count) throw std::runtime_error(".field size does not match its header");
    f.values.resize(count);
    std::memcpy(f.values.data(), bytes.data() + 24, 8 * count);
    return f;
}

static_assert(std::endian::native == std::endian::little, ".field encoding assumes a little-endian host");

} // namespace swe::runner
