#pragma once

// File formats: trajectory CSV (traj_id,t,x), plain numeric matrix CSV, PGM
// (P2/P5 in, P5 out) and JSON views of configs and results.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "liesym/completion.hpp"
#include "liesym/error.hpp"
#include "liesym/jetspace.hpp"
#include "liesym/linalg.hpp"
#include "liesym/sparseopt.hpp"
#include "liesym/symmetry.hpp"

namespace liesym {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
  if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Trajectories from CSV text with a traj_id,t,x header (any column order).
/// Groups keep their first-appearance order; each group is sorted by time.
inline std::vector<Trajectory> parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int c_id = -1, c_t = -1, c_x = -1;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split_commas(line);
    ncols = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == "traj_id") c_id = static_cast<int>(i);
      else if (cols[i] == "t") c_t = static_cast<int>(i);
      else if (cols[i] == "x") c_x = static_cast<int>(i);
    }
    break;
  }
  if (c_id < 0 || c_t < 0 || c_x < 0)
    throw InputError("trajectory CSV: header must contain traj_id,t,x");

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split_commas(line);
    const std::string where = "trajectory CSV line " + std::to_string(lineno);
    if (cols.size() != ncols)
      throw InputError(where + ": expected " + std::to_string(ncols) + " fields, got " +
                       std::to_string(cols.size()));
    const std::string id(cols[static_cast<std::size_t>(c_id)]);
    if (id.empty()) throw InputError(where + ": empty traj_id");
    const double t = detail::parse_double(cols[static_cast<std::size_t>(c_t)], where);
    const double x = detail::parse_double(cols[static_cast<std::size_t>(c_x)], where);
    auto [it, inserted] = groups.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.emplace_back(t, x);
  }
  if (order.empty()) throw InputError("trajectory CSV: no data rows");

  std::vector<Trajectory> out;
  for (const auto& id : order) {
    auto& pts = groups[id];
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    Trajectory tr;
    tr.id = id;
    for (const auto& [t, x] : pts) {
      tr.times.push_back(t);
      tr.states.push_back(x);
    }
    tr.validate();
    out.push_back(std::move(tr));
  }
  return out;
}

inline std::vector<Trajectory> read_trajectory_csv(const std::string& path) {
  return parse_trajectory_csv(detail::read_file(path));
}

inline std::string format_trajectory_csv(const std::vector<Trajectory>& trajs) {
  std::string s = "traj_id,t,x\n";
  for (const auto& tr : trajs)
    for (std::size_t i = 0; i < tr.size(); ++i)
      s += tr.id + "," + detail::format_g17(tr.times[i]) + "," + detail::format_g17(tr.states[i]) +
           "\n";
  return s;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<Trajectory>& trajs) {
  detail::write_file(path, format_trajectory_csv(trajs));
}

/// Numeric matrix, one row per line; blank lines and '#' comments skipped.
inline DenseMatrix parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0, cols = 0;
  Vector data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split_commas(t);
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols)
      throw InputError("matrix CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    for (auto f : fields)
      data.push_back(detail::parse_double(f, "matrix CSV line " + std::to_string(lineno)));
    ++rows;
  }
  if (rows == 0) throw InputError("matrix CSV: no rows");
  return DenseMatrix(rows, cols, std::move(data));
}

inline DenseMatrix read_matrix_csv(const std::string& path) {
  return parse_matrix_csv(detail::read_file(path));
}

inline std::string format_matrix_csv(const DenseMatrix& m) {
  std::string s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) s += ",";
      s += detail::format_g17(m(i, j));
    }
    s += "\n";
  }
  return s;
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
  detail::write_file(path, format_matrix_csv(m));
}

// ---------------------------------------------------------------- PGM

namespace detail {

struct PgmCursor {
  const std::string& s;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < s.size()) {
      if (s[pos] == '#') {
        while (pos < s.size() && s[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  }

  unsigned long number() {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw InputError("PGM: expected a number at byte " + std::to_string(start));
    if (pos - start > 9) throw InputError("PGM: number too large");
    return std::stoul(s.substr(start, pos - start));
  }
};

}  // namespace detail

inline GrayImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw InputError("PGM: expected P2 or P5 magic");
  const bool binary = bytes[1] == '5';
  detail::PgmCursor cur{bytes, 2};
  const auto w = cur.number();
  const auto h = cur.number();
  const auto maxval = cur.number();
  if (w == 0 || h == 0) throw InputError("PGM: zero dimension");
  if (maxval == 0 || maxval > 255) throw InputError("PGM: maxval must be in [1, 255]");
  GrayImage img(w, h);
  const double scale = static_cast<double>(maxval);
  if (binary) {
    if (cur.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[cur.pos])))
      throw InputError("PGM: missing separator before raster");
    ++cur.pos;
    if (bytes.size() - cur.pos < img.pixels.size()) throw InputError("PGM: truncated raster");
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      const auto v = static_cast<unsigned char>(bytes[cur.pos + i]);
      if (v > maxval) throw InputError("PGM: pixel exceeds maxval");
      img.pixels[i] = v / scale;
    }
  } else {
    for (double& p : img.pixels) {
      const auto v = cur.number();
      if (v > maxval) throw InputError("PGM: pixel exceeds maxval");
      p = static_cast<double>(v) / scale;
    }
  }
  return img;
}

inline GrayImage read_pgm(const std::string& path) { return parse_pgm(detail::read_file(path)); }

/// P5, maxval 255; pixels clamped to [0, 1] and rounded.
inline std::string format_pgm(const GrayImage& img) {
  img.validate();
  std::string s = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (double v : img.pixels)
    s.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  return s;
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
  detail::write_file(path, format_pgm(img));
}

// ---------------------------------------------------------------- JSON

/// Finite numbers as-is; inf and NaN as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (double e : v) a.push_back(number_or_null(e));
  return a;
}

inline json to_json(const BasisSpec& b) {
  json a = json::array();
  for (const auto& m : b.indices) a.push_back({m.a, m.b});
  return a;
}

inline json to_json(const DenoiseConfig& c) {
  return {{"mu", c.mu},
          {"projections_p", c.projections_p},
          {"step_a", c.step_a},
          {"max_outer", c.max_outer},
          {"max_inner", c.max_inner},
          {"tol", c.tol},
          {"eps_rank", c.eps_rank},
          {"seed", c.seed},
          {"orthonormal_projections", c.orthonormal_projections}};
}

/// Throws on keys outside `allowed`.
inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InputError(where + ": unknown key '" + k + "'");
}

namespace detail {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + ": bad value for '" + key + "'");
  }
}

}  // namespace detail

inline DenoiseConfig denoise_config_from_json(const json& j, DenoiseConfig base = {}) {
  const std::string where = "denoise config";
  reject_unknown_keys(j,
                      {"mu", "projections_p", "step_a", "max_outer", "max_inner", "tol",
                       "eps_rank", "seed", "orthonormal_projections"},
                      where);
  detail::read_field(j, "mu", base.mu, where);
  detail::read_field(j, "projections_p", base.projections_p, where);
  detail::read_field(j, "step_a", base.step_a, where);
  detail::read_field(j, "max_outer", base.max_outer, where);
  detail::read_field(j, "max_inner", base.max_inner, where);
  detail::read_field(j, "tol", base.tol, where);
  detail::read_field(j, "eps_rank", base.eps_rank, where);
  detail::read_field(j, "seed", base.seed, where);
  detail::read_field(j, "orthonormal_projections", base.orthonormal_projections, where);
  base.validate();
  return base;
}

inline json to_json(const DegreeTrace& t) {
  return {{"degree", t.degree},
          {"rows", t.rows},
          {"cols", t.cols},
          {"raw_ratio", number_or_null(t.raw_ratio)},
          {"raw_gap", number_or_null(t.raw_gap)},
          {"denoised_ratio", number_or_null(t.denoised_ratio)},
          {"raw_deficient", t.raw_deficient},
          {"deficient", t.deficient},
          {"converged", t.converged},
          {"iterations", t.iterations}};
}

inline json to_json(const SymmetryResult& r) {
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back(to_json(t));
  return {{"found", r.found},
          {"message", r.message},
          {"generator", generator_string(r)},
          {"basis_degree", r.basis_degree},
          {"t_basis", to_json(r.t_basis)},
          {"x_basis", to_json(r.x_basis)},
          {"eta_t", vector_json(r.eta_t)},
          {"eta_x", vector_json(r.eta_x)},
          {"sigma", vector_json(r.sigma)},
          {"denoised_sigma", vector_json(r.denoised_sigma)},
          {"gap", number_or_null(r.gap)},
          {"raw_gap", number_or_null(r.raw_gap)},
          {"alignment", number_or_null(r.alignment)},
          {"alignment_degenerate", r.alignment_degenerate},
          {"multiplicity", r.multiplicity},
          {"evolution_selected", r.evolution_selected},
          {"residual_ratio", number_or_null(r.residual_ratio)},
          {"rows", r.rows},
          {"skipped_rows", r.skipped_rows},
          {"converged", r.converged},
          {"seed", r.seed},
          {"trace", trace}};
}

inline json to_json(const RankTest& t) {
  return {{"deficient", t.deficient},
          {"deficient_by_one", t.deficient_by_one},
          {"raw_deficient", t.raw_deficient},
          {"degenerate", t.degenerate},
          {"converged", t.converged},
          {"iterations", t.iterations},
          {"null_dimension", t.null_dimension},
          {"gap", number_or_null(t.gap)},
          {"raw_sigma", vector_json(t.raw_sigma)},
          {"denoised_sigma", vector_json(t.denoised_sigma)}};
}

inline json to_json(const Readout& r) {
  json out = {{"refused", r.refused}, {"reason", r.reason}};
  if (r.refused) return out;
  json values = json::array();
  for (std::size_t i = 0; i < r.values.rows(); ++i) {
    auto row = r.values.row(i);
    values.push_back(vector_json(Vector(row.begin(), row.end())));
  }
  out["grid"] = {{"t_min", r.grid.t_min}, {"t_max", r.grid.t_max}, {"x_min", r.grid.x_min},
                 {"x_max", r.grid.x_max}, {"nt", r.grid.nt},       {"nx", r.grid.nx}};
  out["f_hat"] = values;
  out["residual_rms"] = number_or_null(r.residual_rms);
  out["poles"] = r.poles;
  return out;
}

}  // namespace liesym
