#include "roadscale/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace roadscale::io {

namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  token = strip(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

}  // namespace

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.12g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::IoError, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Trajectory parse_poses_kitti(std::istream& in) {
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    std::istringstream ls(line);
    std::vector<double> values;
    std::string token;
    while (ls >> token) {
      double v = 0.0;
      if (!parse_double(token, v)) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + token + "'", line_no);
      }
      values.push_back(v);
    }
    if (values.size() != 12) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 12 numbers, got " + std::to_string(values.size()),
                  line_no);
    }
    Eigen::Matrix<double, 3, 4, Eigen::RowMajor> m;
    for (int i = 0; i < 12; ++i) m(i / 4, i % 4) = values[static_cast<std::size_t>(i)];
    if (!is_rotation(m.leftCols<3>())) {
      throw Error(ErrorCode::InvalidRotation, "line " + std::to_string(line_no) + ": not a rotation", line_no);
    }
    traj.push_back(Posed::FromMatrix(m));
  }
  return traj;
}

Trajectory read_poses_kitti(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return parse_poses_kitti(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.line());
  }
}

std::string format_poses_kitti(const Trajectory& traj) {
  std::string out;
  for (const auto& p : traj) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (r || c) out += ' ';
        out += format_number(c < 3 ? p.R()(r, c) : p.t()(r));
      }
    }
    out += '\n';
  }
  return out;
}

void write_poses_kitti(const Trajectory& traj, const fs::path& path) { write_file_atomic(path, format_poses_kitti(traj)); }

std::vector<Correspondence> parse_matches(std::istream& in) {
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = strip(line);
    if (s.empty()) continue;
    std::array<double, 4> v{};
    std::size_t field = 0;
    bool ok = true;
    std::size_t start = 0;
    while (ok) {
      const std::size_t comma = s.find(',', start);
      const std::string_view token = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (field >= 4 || !parse_double(token, v[field])) ok = false;
      ++field;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (ok && field == 4) {
      out.push_back({{v[0], v[1]}, {v[2], v[3]}});
      continue;
    }
    if (line_no == 1 && out.empty()) continue;  // header
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected u0,v0,u1,v1", line_no);
  }
  return out;
}

std::vector<Correspondence> read_matches(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return parse_matches(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.line());
  }
}

std::string format_matches(const std::vector<Correspondence>& matches) {
  std::string out = "u0,v0,u1,v1\n";
  for (const auto& m : matches) {
    out += format_number(m.a.u) + ',' + format_number(m.a.v) + ',' + format_number(m.b.u) + ',' + format_number(m.b.v);
    out += '\n';
  }
  return out;
}

void write_matches(const std::vector<Correspondence>& matches, const fs::path& path) {
  write_file_atomic(path, format_matches(matches));
}

std::string pair_file_name(int index) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%06d_%06d.csv", index, index + 1);
  return buf.data();
}

std::string mask_file_name(int index) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%06d.pgm", index);
  return buf.data();
}

LabelMask parse_mask(std::string_view bytes, int expected_width, int expected_height) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t begin = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(bytes.data() + begin, bytes.data() + pos, v);
    if (begin == pos || ec != std::errc()) throw Error(ErrorCode::UnsupportedFormat, std::string("PGM header: bad ") + what);
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw Error(ErrorCode::UnsupportedFormat, "not a binary PGM (P5)");
  pos = 2;
  const int width = read_int("width");
  const int height = read_int("height");
  const int maxval = read_int("maxval");
  if (maxval != 255) throw Error(ErrorCode::UnsupportedFormat, "PGM maxval must be 255");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::UnsupportedFormat, "PGM header not terminated");
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < n) throw Error(ErrorCode::UnsupportedFormat, "PGM pixel data truncated");
  if ((expected_width > 0 && width != expected_width) || (expected_height > 0 && height != expected_height)) {
    throw Error(ErrorCode::DimensionMismatch, "mask is " + std::to_string(width) + "x" + std::to_string(height) +
                                                  ", expected " + std::to_string(expected_width) + "x" +
                                                  std::to_string(expected_height));
  }
  std::vector<std::uint8_t> labels(n);
  std::memcpy(labels.data(), bytes.data() + pos, n);
  return LabelMask(width, height, std::move(labels));
}

LabelMask read_mask(const fs::path& path, int expected_width, int expected_height) {
  const std::string bytes = read_file(path);
  try {
    return parse_mask(bytes, expected_width, expected_height);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string format_mask(const LabelMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(mask.labels().data()), mask.labels().size());
  return out;
}

void write_mask(const LabelMask& mask, const fs::path& path) { write_file_atomic(path, format_mask(mask)); }

std::vector<PointClass> read_classes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<PointClass> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = strip(line);
    if (s.empty() || (line_no == 1 && s == "class")) continue;
    if (s == "road") out.push_back(PointClass::Road);
    else if (s == "clutter") out.push_back(PointClass::Clutter);
    else if (s == "dynamic") out.push_back(PointClass::Dynamic);
    else throw Error(ErrorCode::ParseError, path.string() + ": line " + std::to_string(line_no), line_no);
  }
  return out;
}

void write_classes(const std::vector<PointClass>& classes, const fs::path& path) {
  std::string out = "class\n";
  for (const auto c : classes) {
    out += to_string(c);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace roadscale::io
