#pragma once

// On-disk formats: KITTI pose files, correspondence CSVs, binary PGM label
// masks. Every writer goes through a temporary file and a rename so a failed
// run never leaves a partial output behind.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "roadscale/evaluation.hpp"
#include "roadscale/motion.hpp"
#include "roadscale/road_selection.hpp"
#include "roadscale/synth.hpp"

namespace roadscale::io {

namespace fs = std::filesystem;

/// 12 significant digits, shortest form ("%.12g").
std::string format_number(double v);

void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

/// Each non-empty line: 12 numbers, row-major [R|t].
Trajectory parse_poses_kitti(std::istream& in);
Trajectory read_poses_kitti(const fs::path& path);
std::string format_poses_kitti(const Trajectory& traj);
void write_poses_kitti(const Trajectory& traj, const fs::path& path);

/// CSV `u0,v0,u1,v1`; a leading header line is optional.
std::vector<Correspondence> parse_matches(std::istream& in);
std::vector<Correspondence> read_matches(const fs::path& path);
std::string format_matches(const std::vector<Correspondence>& matches);
void write_matches(const std::vector<Correspondence>& matches, const fs::path& path);

/// `NNNNNN_NNNNNN.csv` for the pair (index, index + 1).
std::string pair_file_name(int index);
/// `NNNNNN.pgm`.
std::string mask_file_name(int index);

/// Binary P5 PGM with maxval 255. Pass a positive expected size to check the dimensions.
LabelMask parse_mask(std::string_view bytes, int expected_width = 0, int expected_height = 0);
LabelMask read_mask(const fs::path& path, int expected_width = 0, int expected_height = 0);
std::string format_mask(const LabelMask& mask);
void write_mask(const LabelMask& mask, const fs::path& path);

/// Per-correspondence ground-truth classes, one name per line after a `class` header.
std::vector<PointClass> read_classes(const fs::path& path);
void write_classes(const std::vector<PointClass>& classes, const fs::path& path);

}  // namespace roadscale::io
