#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ambimaze/maze.hpp"

namespace ambimaze {

// Cell alphabet of the map format.
constexpr char to_char(CellKind k) {
  switch (k) {
    case CellKind::Floor: return '.';
    case CellKind::Wall: return '#';
    case CellKind::Window: return '=';
    case CellKind::GateLeft: return '[';
    case CellKind::GateRight: return ']';
    case CellKind::RewardLeft: return 'L';
    case CellKind::RewardRight: return 'R';
    case CellKind::Clue: return 'C';
    case CellKind::Spawn: return 'S';
  }
  return '?';
}

constexpr std::optional<CellKind> cell_from_char(char c) {
  switch (c) {
    case '.': return CellKind::Floor;
    case '#': return CellKind::Wall;
    case '=': return CellKind::Window;
    case '[': return CellKind::GateLeft;
    case ']': return CellKind::GateRight;
    case 'L': return CellKind::RewardLeft;
    case 'R': return CellKind::RewardRight;
    case 'C': return CellKind::Clue;
    case 'S': return CellKind::Spawn;
    default: return std::nullopt;
  }
}

struct ParseOutcome {
  std::optional<MazeSpec> spec;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return spec.has_value(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Accepts a plain decimal or a multiple of pi written as "<k>pi".
inline std::optional<double> parse_angle(std::string_view s) {
  bool times_pi = false;
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    times_pi = true;
    s.remove_suffix(2);
    if (s.empty()) return std::numbers::pi;
  }
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return times_pi ? v * std::numbers::pi : v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Parses and validates a map document. Never throws on malformed input;
// every problem is reported as a positioned diagnostic.
inline ParseOutcome try_parse_map(std::string_view text) {
  ParseOutcome out;
  auto diag = [&](int line, int col, std::string msg) { out.diagnostics.push_back({line, col, std::move(msg)}); };

  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::size_t grid_begin = 0;
  const auto blank = std::find(lines.begin(), lines.end(), std::string_view{});
  const bool has_header = blank != lines.end();
  if (has_header) grid_begin = static_cast<std::size_t>(blank - lines.begin()) + 1;

  MazeSpec spec;
  std::map<std::string, int> seen_keys;
  for (std::size_t i = 0; has_header && i + 1 < grid_begin; ++i) {
    const int lineno = static_cast<int>(i) + 1;
    const std::string_view line = lines[i];
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      diag(lineno, 1, "header line is not of the form 'key: value'");
      continue;
    }
    const std::string key(detail::trim(line.substr(0, colon)));
    const std::string_view value = detail::trim(line.substr(colon + 1));
    const int value_col = static_cast<int>(value.data() - line.data()) + 1;
    if (seen_keys.count(key)) {
      diag(lineno, 1, "duplicate header key '" + key + "'");
      continue;
    }
    seen_keys[key] = lineno;
    if (key == "fov") {
      auto v = detail::parse_angle(value);
      if (!v) diag(lineno, value_col, "fov is not a number");
      else spec.fov = *v;
    } else if (key == "max_moves" || key == "cell_px") {
      auto v = detail::parse_int(value);
      if (!v || *v < 1 || *v > 1'000'000'000) {
        diag(lineno, value_col, key + " must be a positive integer");
      } else {
        (key == "max_moves" ? spec.max_moves : spec.cell_px) = static_cast<int>(*v);
      }
    } else if (key == "spawn_heading") {
      auto h = heading_from_string(value);
      if (!h) diag(lineno, value_col, "spawn_heading must be one of N NE E SE S SW W NW");
      else spec.spawn_heading = *h;
    } else {
      diag(lineno, 1, "unknown header key '" + key + "'");
    }
  }
  if (spec.cell_px > 256) diag(1, 1, "cell_px must not exceed 256");

  const std::size_t rows = lines.size() - std::min(lines.size(), grid_begin);
  const int grid_line = static_cast<int>(grid_begin) + 1;
  if (rows == 0) {
    diag(grid_line, 1, "empty grid");
    return out;
  }
  const std::size_t width = lines[grid_begin].size();
  if (width == 0) {
    diag(grid_line, 1, "empty grid row");
    return out;
  }
  spec.width = static_cast<int>(width);
  spec.height = static_cast<int>(rows);
  spec.cells.assign(width * rows, CellKind::Wall);
  bool grid_ok = true;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string_view line = lines[grid_begin + r];
    const int lineno = static_cast<int>(grid_begin + r) + 1;
    if (line.size() != width) {
      diag(lineno, static_cast<int>(std::min(line.size(), width)) + 1,
           "ragged grid: row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(width));
      grid_ok = false;
      continue;
    }
    for (std::size_t c = 0; c < width; ++c) {
      auto kind = cell_from_char(line[c]);
      if (!kind) {
        const unsigned char byte = static_cast<unsigned char>(line[c]);
        std::string shown = (byte >= 0x20 && byte < 0x7f) ? std::string(1, line[c]) : "\\x" + std::to_string(byte);
        diag(lineno, static_cast<int>(c) + 1, "unknown cell code '" + shown + "'");
        grid_ok = false;
        continue;
      }
      spec.cells[r * width + c] = *kind;
      if (*kind == CellKind::Spawn) spec.spawn_position = {static_cast<int>(c), static_cast<int>(r)};
    }
  }
  if (!grid_ok || !out.diagnostics.empty()) return out;

  // First spawn wins for spawn_position; validate reports any extras.
  for (std::size_t i = 0; i < spec.cells.size(); ++i)
    if (spec.cells[i] == CellKind::Spawn) {
      spec.spawn_position = spec.cell_at(i);
      break;
    }
  for (Diagnostic d : validate(spec)) {
    d.line += grid_line - 1;
    out.diagnostics.push_back(std::move(d));
  }
  if (out.diagnostics.empty()) out.spec = std::move(spec);
  return out;
}

inline MazeSpec parse_map(std::string_view text) {
  auto outcome = try_parse_map(text);
  if (!outcome.ok()) throw ValidationError(std::move(outcome.diagnostics));
  return std::move(*outcome.spec);
}

inline MazeSpec load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_map(ss.str());
  } catch (const ValidationError& e) {
    std::vector<Diagnostic> ds = e.diagnostics();
    for (auto& d : ds) d.message = path + ": " + d.message;
    throw ValidationError(std::move(ds));
  }
}

// Canonical text: header keys sorted, defaults omitted, then the grid.
inline std::string serialize_map(const MazeSpec& spec) {
  std::string header;
  if (spec.cell_px != kDefaultCellPx) header += "cell_px: " + std::to_string(spec.cell_px) + "\n";
  if (spec.fov != kDefaultFov) header += "fov: " + detail::format_double(spec.fov) + "\n";
  if (spec.max_moves != kDefaultMaxMoves) header += "max_moves: " + std::to_string(spec.max_moves) + "\n";
  if (spec.spawn_heading != Heading::N)
    header += "spawn_heading: " + std::string(to_string(spec.spawn_heading)) + "\n";
  std::string out = header.empty() ? std::string{} : header + "\n";
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) out += to_char(spec.at({c, r}));
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// E-maze generator
// ---------------------------------------------------------------------------

struct EmazeParams {
  int prong_length = 6;
  int spine_length = 7;
  int corridor_width = 2;
};

inline std::vector<std::string> check(const EmazeParams& p) {
  std::vector<std::string> errs;
  if (p.prong_length < 3) errs.push_back("prong_length must be at least 3");
  if (p.spine_length < 5) errs.push_back("spine_length must be at least 5");
  if (p.spine_length % 2 == 0) errs.push_back("spine_length must be odd");
  if (p.corridor_width < 1) errs.push_back("corridor_width must be at least 1");
  return errs;
}

// Three parallel prongs hanging south from a horizontal spine. The side
// prongs are gated where they meet the spine and end in an alcove that bends
// toward the middle prong; the reward site sits at the alcove's end, behind a
// window in the middle prong's wall. The bend keeps the site out of sight
// from the spine, so it can only be seen through the window.
inline MazeSpec generate_emaze(const EmazeParams& params = {}) {
  if (auto errs = check(params); !errs.empty()) {
    std::vector<Diagnostic> ds;
    for (auto& e : errs) ds.push_back({0, 0, e});
    throw ValidationError(std::move(ds));
  }
  const int len = params.prong_length;
  const int span = params.spine_length;
  const int mid = 1 + (span - 1) / 2;  // middle prong column
  const int w = span + 2;
  const int h = len + 3;
  std::vector<CellKind> base(static_cast<std::size_t>(w * h), CellKind::Wall);
  auto put = [&](int c, int r, CellKind k) { base[static_cast<std::size_t>(r * w + c)] = k; };

  const int spine_row = 1;
  const int far_row = len + 1;
  for (int c = 1; c <= span; ++c) put(c, spine_row, CellKind::Floor);
  for (int r = 2; r <= far_row; ++r) {
    put(1, r, CellKind::Floor);
    put(mid, r, CellKind::Floor);
    put(span, r, CellKind::Floor);
  }
  put(1, 2, CellKind::GateLeft);
  put(span, 2, CellKind::GateRight);
  for (int c = 2; c <= mid - 2; ++c) put(c, far_row, CellKind::Floor);
  for (int c = mid + 2; c <= span - 1; ++c) put(c, far_row, CellKind::Floor);
  put(mid - 2, far_row, CellKind::RewardLeft);
  put(mid + 2, far_row, CellKind::RewardRight);
  put(mid - 1, far_row, CellKind::Window);
  put(mid + 1, far_row, CellKind::Window);
  const int spawn_row = 2 + (len - 1) / 2;
  put(mid, spawn_row, CellKind::Spawn);

  // Each base cell becomes a corridor_width square block; only the block's
  // first cell keeps the Spawn marker. The outer border is trimmed back to a
  // single wall cell.
  const int k = params.corridor_width;
  const int trim = k - 1;
  MazeSpec spec;
  spec.width = w * k - 2 * trim;
  spec.height = h * k - 2 * trim;
  spec.cells.assign(static_cast<std::size_t>(spec.width * spec.height), CellKind::Wall);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      const int fr = r + trim;
      const int fc = c + trim;
      const CellKind kind = base[static_cast<std::size_t>((fr / k) * w + fc / k)];
      const bool anchor = fr % k == 0 && fc % k == 0;
      spec.at({c, r}) = (kind == CellKind::Spawn && !anchor) ? CellKind::Floor : kind;
    }
  spec.spawn_position = {mid * k - trim, spawn_row * k - trim};
  spec.spawn_heading = Heading::N;
  if (auto diags = validate(spec); !diags.empty()) throw ValidationError(std::move(diags));
  return spec;
}

// Mirror image across the vertical axis, swapping side-specific cells.
inline MazeSpec mirror(const MazeSpec& spec) {
  MazeSpec out = spec;
  auto swap_side = [](CellKind k) {
    switch (k) {
      case CellKind::GateLeft: return CellKind::GateRight;
      case CellKind::GateRight: return CellKind::GateLeft;
      case CellKind::RewardLeft: return CellKind::RewardRight;
      case CellKind::RewardRight: return CellKind::RewardLeft;
      default: return k;
    }
  };
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      out.at({spec.width - 1 - c, r}) = swap_side(spec.at({c, r}));
  out.spawn_position = {spec.width - 1 - spec.spawn_position.col, spec.spawn_position.row};
  const int hd = static_cast<int>(spec.spawn_heading);
  out.spawn_heading = static_cast<Heading>((kHeadingCount - hd) % kHeadingCount);
  return out;
}

}  // namespace ambimaze
