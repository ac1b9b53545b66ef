#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dtnt/geometry.hpp"

namespace dtnt {

// ASCII formats. All floats are written with shortest round-trip precision
// so that identical data always produces identical bytes.

// .xyz: one point per line, "x y z", LF endings, no header.
PointCloud read_xyz(const std::filesystem::path& path);
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

// .corr: one target index per line; line k is the match of source point k.
std::vector<std::size_t> read_corr(const std::filesystem::path& path);
void write_corr(const std::filesystem::path& path, const std::vector<std::size_t>& match);

// .flow: one "dx dy dz" per line, aligned with the source .xyz.
std::vector<Vec3> read_flow(const std::filesystem::path& path);
void write_flow(const std::filesystem::path& path, const std::vector<Vec3>& displacements);

std::string format_double(double v);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dtnt
