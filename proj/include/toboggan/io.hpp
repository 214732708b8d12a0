#pragma once

// File formats: round-trip number text, the binary matrix layout with its
// text header, and the CSV exports.
//
// Binary matrix (little-endian):
//   offset  0  char[8]   "TOBOGMAT"
//   offset  8  uint32    version (1)
//   offset 12  uint32    reserved (0)
//   offset 16  uint64    rows
//   offset 24  uint64    cols
//   offset 32  float64   grid spacing h
//   offset 40  float64   shift epsilon
//   offset 48  complex128[rows * cols], row-major, (re, im) pairs
// A sibling text file <path>.hdr repeats the header as "key value" lines.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "toboggan/contour.hpp"
#include "toboggan/error.hpp"
#include "toboggan/spectra.hpp"
#include "toboggan/types.hpp"

namespace toboggan::io {

static_assert(std::endian::native == std::endian::little, "binary matrix layout assumes a little-endian host");

inline constexpr std::array<char, 8> matrix_magic{'T', 'O', 'B', 'O', 'G', 'M', 'A', 'T'};
inline constexpr std::uint32_t matrix_version = 1;
inline constexpr std::size_t matrix_header_bytes = 48;

/// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

inline std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out)
        throw error(errc::io, "cannot open " + path.string() + " for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out)
        throw error(errc::io, "write to " + path.string() + " failed");
}

struct MatrixHeader {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    double h = 0.0;
    double epsilon = 0.0;
};

inline void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXcd& a, double h, double epsilon)
{
    auto out = open_output(path, std::ios::out | std::ios::binary);
    const std::uint32_t reserved = 0;
    const std::uint64_t rows = static_cast<std::uint64_t>(a.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(a.cols());
    out.write(matrix_magic.data(), matrix_magic.size());
    out.write(reinterpret_cast<const char*>(&matrix_version), sizeof matrix_version);
    out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    out.write(reinterpret_cast<const char*>(&epsilon), sizeof epsilon);
    const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = a;
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(row_major.size() * sizeof(cplx)));
    finish(out, path);

    const std::filesystem::path hdr_path = path.string() + ".hdr";
    auto hdr = open_output(hdr_path);
    hdr << "format TOBOGMAT\n"
        << "version " << matrix_version << "\n"
        << "rows " << rows << "\n"
        << "cols " << cols << "\n"
        << "h " << format_double(h) << "\n"
        << "epsilon " << format_double(epsilon) << "\n"
        << "layout row-major complex128 little-endian\n"
        << "data_offset " << matrix_header_bytes << "\n";
    finish(hdr, hdr_path);
}

inline Eigen::MatrixXcd read_matrix_binary(const std::filesystem::path& path, MatrixHeader* header = nullptr)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw error(errc::io, "cannot open " + path.string());
    std::array<char, 8> magic{};
    std::uint32_t version = 0, reserved = 0;
    MatrixHeader hd;
    in.read(magic.data(), magic.size());
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
    in.read(reinterpret_cast<char*>(&hd.rows), sizeof hd.rows);
    in.read(reinterpret_cast<char*>(&hd.cols), sizeof hd.cols);
    in.read(reinterpret_cast<char*>(&hd.h), sizeof hd.h);
    in.read(reinterpret_cast<char*>(&hd.epsilon), sizeof hd.epsilon);
    if (!in || magic != matrix_magic)
        throw error(errc::schema_mismatch, path.string() + " is not a TOBOGMAT file");
    if (version != matrix_version)
        throw error(errc::schema_mismatch, path.string() + " has unsupported version " + std::to_string(version));
    const auto rows = static_cast<Eigen::Index>(hd.rows);
    const auto cols = static_cast<Eigen::Index>(hd.cols);
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data(rows, cols);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(cplx)));
    if (!in)
        throw error(errc::schema_mismatch, path.string() + " is truncated");
    if (header)
        *header = hd;
    return data;
}

/// Long-form CSV (row, col, re, im), for small matrices.
inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXcd& a)
{
    auto out = open_output(path);
    out << "row,col,re,im\n";
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out << i << ',' << j << ',' << format_double(a(i, j).real()) << ',' << format_double(a(i, j).imag())
                << '\n';
    finish(out, path);
}

inline void write_spectrum_csv(const std::filesystem::path& path, const Eigensystem& es)
{
    auto out = open_output(path);
    out << "index,re_lambda,im_lambda,residual_right,residual_left,sigma_re,sigma_im\n";
    for (Eigen::Index k = 0; k < es.modes(); ++k) {
        const double rr = k < es.residual_right.size() ? es.residual_right[k] : 0.0;
        const double rl = k < es.residual_left.size() ? es.residual_left[k] : 0.0;
        const cplx s = k < es.sigmas.size() ? es.sigmas[k] : cplx{};
        out << k << ',' << format_double(es.lambdas[k].real()) << ',' << format_double(es.lambdas[k].imag()) << ','
            << format_double(rr) << ',' << format_double(rl) << ',' << format_double(s.real()) << ','
            << format_double(s.imag()) << '\n';
    }
    finish(out, path);
}

inline void write_path_csv(const std::filesystem::path& path, std::span<const ContourPoint> points)
{
    auto out = open_output(path);
    out << "gamma,re_z,im_z,re_r,im_r\n";
    for (const auto& p : points)
        out << format_double(p.gamma) << ',' << format_double(p.z.real()) << ',' << format_double(p.z.imag()) << ','
            << format_double(p.r.real()) << ',' << format_double(p.r.imag()) << '\n';
    finish(out, path);
}

struct ScanSample {
    cplx E;
    double abs_F = 0.0;
};

inline void write_scan_csv(const std::filesystem::path& path, std::span<const ScanSample> samples)
{
    auto out = open_output(path);
    out << "re_E,im_E,abs_F\n";
    for (const auto& s : samples)
        out << format_double(s.E.real()) << ',' << format_double(s.E.imag()) << ',' << format_double(s.abs_F) << '\n';
    finish(out, path);
}

/// Writes a CSV table whose cells are already rendered.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows)
{
    auto out = open_output(path);
    for (std::size_t j = 0; j < header.size(); ++j)
        out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out << (j ? "," : "") << row[j];
        out << '\n';
    }
    finish(out, path);
}

/// nlohmann serializes doubles in shortest round-trip form; keys come out sorted.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc)
{
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw error(errc::io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(errc::config, path.string() + ": " + e.what());
    }
}

} // namespace toboggan::io
