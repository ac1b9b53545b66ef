#include "dtnt/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dtnt/error.hpp"

namespace dtnt {

namespace {

double parse_double(std::string_view text, const std::filesystem::path& path, std::size_t line_no) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed float '" +
                      std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const std::size_t next = line.find(' ', pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw IoError("format_double failed");
    return std::string(buf, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PointCloud read_xyz(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    PointCloud cloud;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        Vec3 p(parse_double(fields[0], path, line_no),
               parse_double(fields[1], path, line_no),
               parse_double(fields[2], path, line_no));
        if (!is_finite(p)) {
            throw InvalidCoordinateError(path.string() + ":" + std::to_string(line_no) +
                                         ": non-finite coordinate");
        }
        cloud.points.push_back(p);
    }
    if (cloud.points.empty()) throw EmptyCloudError(path.string() + ": no points");
    return cloud;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
    std::string out;
    out.reserve(cloud.points.size() * 24);
    for (const Vec3& p : cloud.points) {
        out += format_double(p.x());
        out += ' ';
        out += format_double(p.y());
        out += ' ';
        out += format_double(p.z());
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<std::size_t> read_corr(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::size_t> match;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
        if (ec != std::errc() || ptr != line.data() + line.size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed index");
        }
        match.push_back(value);
    }
    return match;
}

void write_corr(const std::filesystem::path& path, const std::vector<std::size_t>& match) {
    std::string out;
    out.reserve(match.size() * 6);
    for (std::size_t idx : match) {
        out += std::to_string(idx);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<Vec3> read_flow(const std::filesystem::path& path) {
    return read_xyz(path).points;
}

void write_flow(const std::filesystem::path& path, const std::vector<Vec3>& displacements) {
    PointCloud cloud;
    cloud.points = displacements;
    write_xyz(path, cloud);
}

}  // namespace dtnt
