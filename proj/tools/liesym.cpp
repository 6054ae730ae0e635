// liesym: generate trajectories, discover symmetries, complete images and
// denoise matrices from the command line.
//
// Exit codes: 0 ok, 2 input error, 3 no symmetry found, 4 solver did not converge.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "liesym.hpp"

namespace fs = std::filesystem;
using liesym::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoSymmetry = 3;
constexpr int kExitNoConvergence = 4;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    json j = json::parse(liesym::detail::read_file(path));
    if (!j.is_object()) throw liesym::InputError("config '" + path + "' must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw liesym::InputError("config '" + path + "': " + e.what());
  }
}

template <typename T>
T take(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw liesym::InputError(std::string("config: bad value for '") + key + "'");
  }
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

void write_json(const std::string& path, const json& j) {
  liesym::detail::write_file(path, j.dump(2) + "\n");
}

liesym::DenoiseConfig denoise_block(const json& cfg, liesym::DenoiseConfig base, std::uint64_t seed) {
  if (cfg.contains("denoise")) {
    const json& d = cfg.at("denoise");
    if (d.is_object() && d.contains("seed"))
      throw liesym::InputError("config: denoise.seed is not accepted, use the top-level seed");
    base = liesym::denoise_config_from_json(d, base);
  }
  base.seed = seed;
  return base;
}

// ------------------------------------------------------------ generate

struct GenerateFlags {
  std::optional<std::string> equation;
  std::optional<double> noise, t0, t1;
  std::optional<int> steps;
};

liesym::RhsSpec rhs_from_json(const json& e) {
  if (e.is_string()) return liesym::named_rhs(e.get<std::string>());
  liesym::reject_unknown_keys(e, {"name", "terms"}, "equation");
  liesym::RhsSpec rhs;
  rhs.name = take<std::string>(e, "name", "inline");
  if (!e.contains("terms") || !e.at("terms").is_array())
    throw liesym::InputError("equation: 'terms' must be an array of [coefficient, a, b]");
  for (const auto& t : e.at("terms")) {
    if (!t.is_array() || t.size() != 3)
      throw liesym::InputError("equation: each term is [coefficient, a, b]");
    try {
      rhs.terms.push_back({t[0].get<double>(), {t[1].get<int>(), t[2].get<int>()}});
    } catch (const json::exception&) {
      throw liesym::InputError("equation: bad term " + t.dump());
    }
  }
  rhs.validate();
  return rhs;
}

int cmd_generate(const Common& common, const GenerateFlags& flags) {
  json cfg = load_config(common.config_path);
  liesym::reject_unknown_keys(
      cfg, {"equation", "t0", "t1", "steps", "initial_conditions", "noise_sigma", "seed"},
      "generate config");
  json equation = cfg.contains("equation") ? cfg.at("equation") : json("riccati");
  if (flags.equation) equation = *flags.equation;
  const liesym::RhsSpec rhs = rhs_from_json(equation);
  const double t0 = flags.t0.value_or(take(cfg, "t0", 1.0));
  const double t1 = flags.t1.value_or(take(cfg, "t1", 2.0));
  const int steps = flags.steps.value_or(take(cfg, "steps", 399));
  const double sigma = flags.noise.value_or(take(cfg, "noise_sigma", 0.0));
  const std::uint64_t seed = common.seed.value_or(take<std::uint64_t>(cfg, "seed", 0));
  std::vector<double> x0s;
  if (cfg.contains("initial_conditions")) {
    x0s = take<std::vector<double>>(cfg, "initial_conditions", {});
  } else if (rhs.name == "riccati") {
    for (double k : {0.1, 0.3, 1.0, 3.0, 10.0}) x0s.push_back(liesym::riccati_solution(t0, k));
  } else {
    x0s = {0.5, 1.0, 1.5, 2.0, 2.5};
  }
  if (x0s.empty()) throw liesym::InputError("generate: no initial conditions");

  std::vector<liesym::Trajectory> trajs;
  std::size_t points = 0, truncated = 0;
  for (std::size_t i = 0; i < x0s.size(); ++i) {
    const std::string id = std::to_string(i);
    auto res = liesym::integrate_rk4(rhs, t0, x0s[i], t1, steps, id);
    if (res.truncated) ++truncated;
    if (res.trajectory.size() < 3) {
      std::cerr << "warning: trajectory " << id << " truncated below 3 points, dropped\n";
      continue;
    }
    trajs.push_back(liesym::add_noise(res.trajectory, sigma, liesym::derive_seed(seed, id)));
    points += trajs.back().size();
  }
  if (trajs.empty()) throw liesym::InputError("generate: every trajectory hit a singularity");

  const std::string csv = out_path(common, "trajectories.csv");
  liesym::write_trajectory_csv(csv, trajs);
  json eq_json = equation;
  json resolved = {{"equation", eq_json}, {"t0", t0},   {"t1", t1},
                   {"steps", steps},      {"initial_conditions", x0s},
                   {"noise_sigma", sigma}, {"seed", seed}};
  write_json(out_path(common, "generate.json"),
             {{"command", "generate"},
              {"config", resolved},
              {"trajectories", trajs.size()},
              {"points", points},
              {"truncated", truncated},
              {"output", "trajectories.csv"}});
  std::printf("generate: %zu trajectories, %zu points, noise sigma %g, seed %llu -> %s\n",
              trajs.size(), points, sigma, static_cast<unsigned long long>(seed), csv.c_str());
  return kExitOk;
}

// ------------------------------------------------------------ discover

struct DiscoverFlags {
  std::optional<std::string> input;
  std::optional<int> max_degree;
  std::optional<double> mu;
  bool no_readout = false;
  bool allow_negative = false;
};

int cmd_discover(const Common& common, const DiscoverFlags& flags) {
  json cfg = load_config(common.config_path);
  liesym::reject_unknown_keys(
      cfg,
      {"input", "seed", "min_degree", "max_degree", "allow_negative", "max_rows",
       "alignment_threshold", "min_gap", "smoothing_half_width", "neighbors",
       "neighbors_per_trajectory", "fit_degree", "x_weight", "readout", "grid", "denoise"},
      "discover config");
  const std::string input = flags.input.value_or(take<std::string>(cfg, "input", ""));
  if (input.empty()) throw liesym::InputError("discover: no input CSV (--input or config 'input')");
  const std::uint64_t seed = common.seed.value_or(take<std::uint64_t>(cfg, "seed", 0));

  liesym::DetectOptions opts;
  opts.min_degree = take(cfg, "min_degree", opts.min_degree);
  opts.max_degree = flags.max_degree.value_or(take(cfg, "max_degree", opts.max_degree));
  opts.allow_negative = flags.allow_negative || take(cfg, "allow_negative", false);
  opts.max_rows = take(cfg, "max_rows", opts.max_rows);
  opts.alignment_threshold = take(cfg, "alignment_threshold", opts.alignment_threshold);
  opts.min_gap = take(cfg, "min_gap", opts.min_gap);
  opts.validate();
  liesym::DerivativeOptions dopts{take(cfg, "smoothing_half_width", 2)};
  if (dopts.smoothing_half_width < 0)
    throw liesym::InputError("discover: smoothing_half_width must be >= 0");
  liesym::NormalOptions nopts;
  nopts.neighbors = take(cfg, "neighbors", nopts.neighbors);
  nopts.neighbors_per_trajectory = take(cfg, "neighbors_per_trajectory", nopts.neighbors_per_trajectory);
  nopts.fit_degree = take(cfg, "fit_degree", nopts.fit_degree);
  nopts.x_weight = take(cfg, "x_weight", nopts.x_weight);
  const bool readout = !flags.no_readout && take(cfg, "readout", true);
  std::size_t nt = 20, nx = 20;
  if (cfg.contains("grid")) {
    liesym::reject_unknown_keys(cfg.at("grid"), {"nt", "nx"}, "grid");
    nt = take(cfg.at("grid"), "nt", nt);
    nx = take(cfg.at("grid"), "nx", nx);
  }
  liesym::DenoiseConfig dcfg = denoise_block(cfg, {}, seed);
  if (flags.mu) dcfg.mu = *flags.mu;
  dcfg.validate();

  const auto trajs = liesym::read_trajectory_csv(input);
  const auto derivs = liesym::estimate_all_derivatives(trajs, dopts);
  const auto normals = liesym::estimate_normals(derivs, nopts);
  const liesym::SymmetryResult res = liesym::detect(normals.samples, opts, dcfg);

  json resolved = {{"input", input},
                   {"seed", seed},
                   {"min_degree", opts.min_degree},
                   {"max_degree", opts.max_degree},
                   {"allow_negative", opts.allow_negative},
                   {"max_rows", opts.max_rows},
                   {"alignment_threshold", opts.alignment_threshold},
                   {"min_gap", opts.min_gap},
                   {"smoothing_half_width", dopts.smoothing_half_width},
                   {"neighbors", nopts.neighbors},
                   {"neighbors_per_trajectory", nopts.neighbors_per_trajectory},
                   {"fit_degree", nopts.fit_degree},
                   {"x_weight", nopts.x_weight},
                   {"readout", readout},
                   {"grid", {{"nt", nt}, {"nx", nx}}},
                   {"denoise", liesym::to_json(dcfg)}};
  json out = {{"command", "discover"},
              {"config", resolved},
              {"trajectories", trajs.size()},
              {"samples", normals.samples.size()},
              {"dropped_samples", normals.dropped},
              {"result", liesym::to_json(res)}};
  if (readout && res.found) {
    const auto grid = liesym::ReadoutGrid::covering(normals.samples, nt, nx);
    out["readout"] = liesym::to_json(
        liesym::model_readout(res, normals.samples, grid, opts.alignment_threshold));
  }
  write_json(out_path(common, "discover.json"), out);

  std::printf("discover: %s\n", res.message.c_str());
  if (res.found) {
    std::printf("generator: %s\n", liesym::generator_string(res).c_str());
    std::printf("alignment: %.6f\n", res.alignment);
    if (out.contains("readout")) {
      const json& r = out["readout"];
      if (r["refused"].get<bool>())
        std::printf("readout refused: %s\n", r["reason"].get<std::string>().c_str());
      else
        std::printf("readout: f = xi_x/xi_t, residual rms %.3g\n", r["residual_rms"].get<double>());
    }
    return kExitOk;
  }
  return res.converged ? kExitNoSymmetry : kExitNoConvergence;
}

// ------------------------------------------------------------ complete

struct CompleteFlags {
  std::optional<std::string> input;
  std::optional<std::size_t> rank;
  std::optional<double> fraction, mu;
};

liesym::DenoiseConfig completion_defaults() {
  liesym::DenoiseConfig c;
  c.mu = 20.0;
  c.max_outer = 1000;
  c.max_inner = 200;
  c.tol = 1e-6;
  return c;
}

int cmd_complete(const Common& common, const CompleteFlags& flags) {
  json cfg = load_config(common.config_path);
  liesym::reject_unknown_keys(cfg, {"input", "planted", "rank", "fraction", "seed", "denoise"},
                              "complete config");
  const std::uint64_t seed = common.seed.value_or(take<std::uint64_t>(cfg, "seed", 0));
  const std::string input = flags.input.value_or(take<std::string>(cfg, "input", ""));
  std::size_t pw = 32, ph = 32, prank = 3;
  if (cfg.contains("planted")) {
    liesym::reject_unknown_keys(cfg.at("planted"), {"width", "height", "rank"}, "planted");
    pw = take(cfg.at("planted"), "width", pw);
    ph = take(cfg.at("planted"), "height", ph);
    prank = take(cfg.at("planted"), "rank", prank);
  }
  const liesym::GrayImage source =
      input.empty() ? liesym::planted_low_rank_image(pw, ph, prank, seed) : liesym::read_pgm(input);
  const std::size_t rank = flags.rank.value_or(take(cfg, "rank", std::size_t{3}));
  const double fraction = flags.fraction.value_or(take(cfg, "fraction", 0.5));
  liesym::DenoiseConfig dcfg = denoise_block(cfg, completion_defaults(), seed);
  if (flags.mu) dcfg.mu = *flags.mu;
  dcfg.validate();

  const liesym::GrayImage truncated = liesym::truncate_rank(source, rank);
  const liesym::Corruption cor = liesym::corrupt(truncated, fraction, seed);
  const liesym::Recovery rec = liesym::recover(cor.image, cor.mask, dcfg);

  liesym::write_pgm(out_path(common, "truncated.pgm"), truncated);
  liesym::write_pgm(out_path(common, "corrupted.pgm"), cor.image);
  liesym::write_pgm(out_path(common, "recovered.pgm"), rec.image);
  json source_json = input.empty()
                         ? json{{"planted", {{"width", pw}, {"height", ph}, {"rank", prank}}}}
                         : json{{"input", input}};
  json resolved = {{"source", source_json},
                   {"rank", rank},
                   {"fraction", fraction},
                   {"seed", seed},
                   {"denoise", liesym::to_json(dcfg)}};
  const double err_rec = liesym::relative_error(rec.image, truncated);
  const double err_cor = liesym::relative_error(cor.image, truncated);
  write_json(out_path(common, "complete.json"),
             {{"command", "complete"},
              {"config", resolved},
              {"width", source.width},
              {"height", source.height},
              {"corrupted_pixels", cor.corrupted.size()},
              {"rel_error", err_rec},
              {"rel_error_corrupted", err_cor},
              {"iterations", rec.iterations},
              {"converged", rec.converged},
              {"constraint_residual", rec.constraint_residual}});
  std::printf("complete: %zux%zu rank %zu, %zu pixels corrupted, rel error %.3g (corrupted %.3g)\n",
              source.width, source.height, rank, cor.corrupted.size(), err_rec, err_cor);
  return rec.converged ? kExitOk : kExitNoConvergence;
}

// ------------------------------------------------------------ denoise

struct DenoiseFlags {
  std::optional<std::string> input;
  std::optional<double> mu, eps_rank;
  std::optional<std::size_t> projections;
};

int cmd_denoise(const Common& common, const DenoiseFlags& flags) {
  json cfg = load_config(common.config_path);
  liesym::reject_unknown_keys(cfg, {"input", "seed", "denoise"}, "denoise config");
  const std::string input = flags.input.value_or(take<std::string>(cfg, "input", ""));
  if (input.empty()) throw liesym::InputError("denoise: no input matrix (--input or config 'input')");
  const std::uint64_t seed = common.seed.value_or(take<std::uint64_t>(cfg, "seed", 0));
  liesym::DenoiseConfig dcfg = denoise_block(cfg, {}, seed);
  if (flags.mu) dcfg.mu = *flags.mu;
  if (flags.eps_rank) dcfg.eps_rank = *flags.eps_rank;
  if (flags.projections) dcfg.projections_p = *flags.projections;
  dcfg.validate();

  const liesym::DenseMatrix b = liesym::read_matrix_csv(input);
  const liesym::RankTest test = liesym::rank_deficiency_test(b, dcfg);
  json resolved = {{"input", input}, {"seed", seed}, {"denoise", liesym::to_json(dcfg)}};
  write_json(out_path(common, "denoise.json"),
             {{"command", "denoise"},
              {"config", resolved},
              {"rows", b.rows()},
              {"cols", b.cols()},
              {"verdict", test.deficient_by_one},
              {"test", liesym::to_json(test)}});
  if (test.degenerate)
    std::printf("denoise: degenerate input (all singular values zero)\n");
  else
    std::printf("denoise: deficient by one = %s (null dimension %zu)\n",
                test.deficient_by_one ? "true" : "false", test.null_dimension);
  return test.converged ? kExitOk : kExitNoConvergence;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file");
  sub->add_option("--seed", c.seed, "RNG seed (overrides config)");
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lie symmetry discovery from trajectory data"};
  app.require_subcommand(1);
  Common common;

  GenerateFlags gen;
  auto* g = app.add_subcommand("generate", "integrate an ODE and write trajectories.csv");
  add_common(g, common);
  g->add_option("--equation", gen.equation, "riccati | linear_x | linear_t | constant");
  g->add_option("--noise", gen.noise, "relative noise sigma");
  g->add_option("--t0", gen.t0, "start time");
  g->add_option("--t1", gen.t1, "end time");
  g->add_option("--steps", gen.steps, "RK4 steps per trajectory");

  DiscoverFlags dis;
  auto* d = app.add_subcommand("discover", "detect a symmetry generator and write discover.json");
  add_common(d, common);
  d->add_option("--input", dis.input, "trajectory CSV (traj_id,t,x)");
  d->add_option("--max-degree", dis.max_degree, "basis degree cap");
  d->add_option("--mu", dis.mu, "denoiser Lagrange weight");
  d->add_flag("--no-readout", dis.no_readout, "skip the f = xi_x/xi_t readout");
  d->add_flag("--allow-negative", dis.allow_negative, "Laurent basis with negative powers");

  CompleteFlags com;
  auto* c = app.add_subcommand("complete", "rank-reduce, corrupt and recover an image");
  add_common(c, common);
  c->add_option("--input", com.input, "PGM image (default: planted low-rank image)");
  c->add_option("--rank", com.rank, "truncation rank");
  c->add_option("--fraction", com.fraction, "fraction of pixels to corrupt");
  c->add_option("--mu", com.mu, "denoiser Lagrange weight");

  DenoiseFlags den;
  auto* n = app.add_subcommand("denoise", "denoise a matrix and test rank deficiency by one");
  add_common(n, common);
  n->add_option("--input", den.input, "matrix CSV");
  n->add_option("--mu", den.mu, "denoiser Lagrange weight");
  n->add_option("--eps-rank", den.eps_rank, "relative rank threshold");
  n->add_option("-p,--projections", den.projections, "number of random projections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (g->parsed()) return cmd_generate(common, gen);
    if (d->parsed()) return cmd_discover(common, dis);
    if (c->parsed()) return cmd_complete(common, com);
    if (n->parsed()) return cmd_denoise(common, den);
  } catch (const liesym::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const liesym::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
