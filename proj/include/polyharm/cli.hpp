#pragma once

// Command implementations behind the polyharm executable. Each command reads
// one JSON config, writes its files into an output directory and returns the
// process exit code: 0 success, 1 numerical failure, 2 input or config error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyharm/density.hpp"
#include "polyharm/dyadic.hpp"
#include "polyharm/errors.hpp"
#include "polyharm/io.hpp"
#include "polyharm/kernel.hpp"
#include "polyharm/placement.hpp"
#include "polyharm/quasi_interp.hpp"

namespace polyharm::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------- JSON output

inline void dump_json(std::ostream& out, const json& v, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << json(it.key()).dump() << ": ";
        dump_json(out, it.value(), indent + 2);
      }
      out << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        dump_json(out, v[i], indent + 2);
      }
      out << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = v.get<double>();
      if (!std::isfinite(x)) {
        out << "null";
      } else {
        out << io::format_real(x);
      }
      return;
    }
    default:
      out << v.dump();
  }
}

inline void write_json_file(const fs::path& path, const json& v) {
  io::with_output_file(path.string(), [&](std::ostream& out) {
    dump_json(out, v);
    out << "\n";
  });
}

// ---------------------------------------------------------------- strict config reading

/// A JSON object whose keys must all be consumed.
class Block {
 public:
  Block(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InputError(name_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw InputError(name_ + "." + key + ": missing");
    return j_.at(key);
  }

  double real(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw InputError(name_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  double real(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

  int integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw InputError(name_ + "." + key + ": expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw InputError(name_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> reals(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw InputError(name_ + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InputError(name_ + "." + key + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw InputError(name_ + "." + key + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw InputError(name_ + "." + key + ": expected an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  Point point(const std::string& key) {
    const auto xs = reals(key);
    if (xs.empty()) throw InputError(name_ + "." + key + ": empty point");
    try {
      return Point(xs);
    } catch (const std::exception& e) {
      throw InputError(name_ + "." + key + ": " + e.what());
    }
  }

  std::vector<Point> points(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw InputError(name_ + "." + key + ": expected an array of points");
    std::vector<Point> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      Block wrap(json{{"p", v[i]}}, name_ + "." + key + "[" + std::to_string(i) + "]");
      out.push_back(wrap.point("p"));
    }
    return out;
  }

  Block child(const std::string& key) { return Block(raw(key), name_ + "." + key); }

  /// Throws on any key that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw InputError(name_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  json j_;
  std::string name_;
  std::set<std::string> seen_;
};

struct RunConfig {
  fs::path base_dir;  // relative input paths resolve against this
  std::uint64_t seed = 0;
  std::optional<json> multires, density, kernel, quadrature, study, dyadic, probes, inputs;
};

inline RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw InputError("config: top level must be an object");
  static const std::set<std::string> known{"schema_version", "seed", "multires", "density", "kernel", "quadrature",
                                           "study", "dyadic", "probes", "inputs"};
  RunConfig rc;
  rc.base_dir = base_dir;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key())) throw InputError("config: unknown key '" + it.key() + "'");
  }
  if (doc.contains("schema_version") && doc.at("schema_version") != kSchemaVersion) {
    throw InputError("config: unsupported schema_version");
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer()) throw InputError("config.seed: expected an integer");
    rc.seed = doc.at("seed").get<std::uint64_t>();
  }
  auto take = [&](const char* key, std::optional<json>& slot) {
    if (doc.contains(key)) slot = doc.at(key);
  };
  take("multires", rc.multires);
  take("density", rc.density);
  take("kernel", rc.kernel);
  take("quadrature", rc.quadrature);
  take("study", rc.study);
  take("dyadic", rc.dyadic);
  take("probes", rc.probes);
  take("inputs", rc.inputs);
  return rc;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

inline const json& require_block(const std::optional<json>& b, const char* name) {
  if (!b) throw InputError(std::string("config: missing '") + name + "' block");
  return *b;
}

inline MultiresSpec read_multires(const json& j) {
  Block b(j, "multires");
  MultiresSpec s;
  s.j = b.integer("j");
  s.k = b.integer("k");
  s.d = b.integer("d");
  s.epsilon = b.real("epsilon", s.epsilon);
  s.degree = b.integer("degree", 0);
  s.defect = b.points("defect");
  s.box_lo = b.point("box_lo");
  s.box_hi = b.point("box_hi");
  b.finish();
  s.validate();
  return s;
}

inline DensityParams read_density_params(const json& j) {
  Block b(j, "density");
  DensityParams p;
  p.degree = b.integer("degree");
  p.stability_cap = b.real("stability_cap", 0.0);
  p.majorant_exponent = b.real("majorant_exponent", p.majorant_exponent);
  p.growth_exponent = b.real("growth_exponent", p.growth_exponent);
  b.finish();
  p.validate();
  return p;
}

struct KernelChoice {
  int d;
  int k;
};

inline KernelChoice read_kernel(const json& j) {
  Block b(j, "kernel");
  KernelChoice kc{b.integer("d"), b.integer("k")};
  b.finish();
  fundamental_normalization(kc.d, kc.k);
  return kc;
}

inline QuadratureSpec read_quadrature(const json& j) {
  Block b(j, "quadrature");
  QuadratureSpec q;
  q.cells_per_rho = b.integer("cells_per_rho", q.cells_per_rho);
  if (b.has("rule")) {
    const auto rule = b.text("rule");
    if (rule == "midpoint") {
      q.rule = QuadratureRule::Midpoint;
    } else if (rule == "gauss2") {
      q.rule = QuadratureRule::Gauss2;
    } else {
      throw InputError("quadrature.rule: expected 'midpoint' or 'gauss2'");
    }
  }
  if (b.has("lo") || b.has("hi")) {
    q.lo = b.point("lo");
    q.hi = b.point("hi");
  }
  b.finish();
  q.validate();
  return q;
}

struct DyadicConfig {
  DyadicParams params;
  Point box_lo, box_hi;
  int overlap_points = 100;
};

inline DyadicConfig read_dyadic(const json& j, int k) {
  Block b(j, "dyadic");
  DyadicConfig c;
  c.params.gamma = b.real("gamma", c.params.gamma);
  c.params.sigma = b.real("sigma", c.params.sigma);
  c.params.min_level = b.integer("min_level", c.params.min_level);
  c.params.max_level = b.integer("max_level", c.params.max_level);
  c.box_lo = b.point("box_lo");
  c.box_hi = b.point("box_hi");
  c.overlap_points = b.integer("overlap_points", c.overlap_points);
  b.finish();
  c.params.validate(k);
  if (c.box_lo.dim() != c.box_hi.dim()) throw InputError("dyadic: box dimension mismatch");
  for (std::size_t a = 0; a < c.box_lo.dim(); ++a) {
    if (!(c.box_lo[a] < c.box_hi[a])) throw InputError("dyadic: empty box");
  }
  if (c.overlap_points < 0) throw InputError("dyadic.overlap_points must be non-negative");
  return c;
}

struct ProbeGrid {
  Point lo, hi;
  int per_axis_log2;
};

inline ProbeGrid read_probes(const json& j) {
  Block b(j, "probes");
  ProbeGrid g{b.point("lo"), b.point("hi"), b.integer("per_axis_log2")};
  b.finish();
  if (g.lo.dim() != g.hi.dim()) throw InputError("probes: box dimension mismatch");
  if (g.per_axis_log2 < 1 || g.per_axis_log2 > 12) throw InputError("probes.per_axis_log2 must lie in [1, 12]");
  for (std::size_t a = 0; a < g.lo.dim(); ++a) {
    if (!(g.lo[a] < g.hi[a])) throw InputError("probes: empty box");
  }
  return g;
}

inline StudyConfig read_study(const RunConfig& rc) {
  const KernelChoice kc = read_kernel(require_block(rc.kernel, "kernel"));
  StudyConfig cfg;
  cfg.d = kc.d;
  cfg.k = kc.k;
  {
    Block b(require_block(rc.density, "density"), "density");
    cfg.degree = b.integer("degree");
    cfg.stability_cap = b.real("stability_cap", 0.0);
    cfg.epsilon = b.real("growth_exponent", cfg.epsilon);
    b.finish();
  }
  if (rc.quadrature) cfg.quadrature = read_quadrature(*rc.quadrature);
  Block b(require_block(rc.study, "study"), "study");
  if (b.has("placement")) {
    const auto pl = b.text("placement");
    if (pl == "uniform") {
      cfg.placement = Placement::Uniform;
    } else if (pl == "multires") {
      cfg.placement = Placement::Multires;
    } else {
      throw InputError("study.placement: expected 'uniform' or 'multires'");
    }
  }
  cfg.levels = b.integers("levels");
  {
    Block bump = b.child("bump");
    cfg.bump.exponent = bump.integer("exponent", cfg.bump.exponent);
    cfg.bump.center = bump.point("center");
    cfg.bump.scale = bump.real("scale", 1.0);
    bump.finish();
  }
  cfg.box_lo = b.point("box_lo");
  cfg.box_hi = b.point("box_hi");
  cfg.defect = b.point("defect");
  cfg.probe_level = b.integer("probe_level", 0);
  if (b.has("probe_lo") || b.has("probe_hi")) {
    cfg.probe_lo = b.point("probe_lo");
    cfg.probe_hi = b.point("probe_hi");
  }
  b.finish();
  cfg.validate();
  return cfg;
}

struct Inputs {
  std::optional<fs::path> centers, density, certificates;
};

inline Inputs read_inputs(const RunConfig& rc) {
  Inputs in;
  if (!rc.inputs) return in;
  Block b(*rc.inputs, "inputs");
  auto resolve = [&](const std::string& key) -> std::optional<fs::path> {
    if (!b.has(key)) return std::nullopt;
    fs::path p = b.text(key);
    return p.is_absolute() ? p : rc.base_dir / p;
  };
  in.centers = resolve("centers");
  in.density = resolve("density");
  in.certificates = resolve("certificates");
  b.finish();
  return in;
}

// ---------------------------------------------------------------- commands

inline json point_json(Coords x) { return json(std::vector<double>(x.begin(), x.end())); }

inline void run_place(const RunConfig& rc, const fs::path& out_dir) {
  const MultiresSpec spec = read_multires(require_block(rc.multires, "multires"));
  const RingPlan plan = build_ring_plan(spec);
  const CenterSet cs = generate_centers(spec);
  const CardinalityReport card = cardinality_report(spec, cs);

  io::with_output_file((out_dir / "centers.csv").string(), [&](std::ostream& out) { io::write_centers(out, cs); });

  std::map<int, std::size_t> per_level;
  for (std::size_t i = 0; i < cs.size(); ++i) ++per_level[*cs.level(i)];
  json regions = json::array();
  for (const auto& r : plan.regions) {
    regions.push_back({{"level", r.level},
                       {"inner_radius", r.inner},
                       {"outer_radius", r.outer},
                       {"spacing", r.spacing},
                       {"centers", per_level[r.level]}});
  }
  json report{{"schema_version", kSchemaVersion},
              {"j", spec.j},
              {"k", spec.k},
              {"d", spec.d},
              {"epsilon", spec.epsilon},
              {"degree", spec.effective_degree()},
              {"regions", regions},
              {"global", {{"level", plan.global_level}, {"spacing", plan.global_spacing},
                          {"centers", per_level[plan.global_level]}}},
              {"total_centers", cs.size()},
              {"cardinality",
               {{"ball_radius", card.ball_radius},
                {"actual", card.actual},
                {"bound", card.bound},
                {"uniform_count", card.uniform_count},
                {"ratio_to_bound", card.ratio_to_bound},
                {"ratio_to_uniform", card.ratio_to_uniform}}}};
  write_json_file(out_dir / "place_report.json", report);
}

inline void run_density(const RunConfig& rc, const fs::path& out_dir) {
  const DensityParams params = read_density_params(require_block(rc.density, "density"));
  const ProbeGrid grid = read_probes(require_block(rc.probes, "probes"));
  const Inputs in = read_inputs(rc);
  if (!in.centers) throw InputError("config: inputs.centers is required");
  const CenterSet cs =
      io::with_input_file(in.centers->string(), [&](std::istream& s) { return io::read_centers(s, in.centers->string()); });
  if (grid.lo.dim() != cs.dim()) throw InputError("probes: dimension differs from the centers file");

  ReproductionCache cache;
  const DensityField df = sample_minimal_density(cs, probe_grid(grid.lo, grid.hi, grid.per_axis_log2), params, &cache);
  const double r = params.majorant_exponent;
  const double eps = params.growth_exponent;
  const DensityField maj = majorant_field(df, r);
  const double c_sg = certify_slow_growth(df, eps);
  const double c_sm = certify_self_majorization(df, r);
  const auto sm_to_sg = lemma_transfer_sm_to_sg(c_sm, r);
  const auto sg_to_sm = lemma_transfer_sg_to_sm(c_sg, eps);

  io::with_output_file((out_dir / "density.csv").string(), [&](std::ostream& out) { io::write_density(out, df); });
  io::with_output_file((out_dir / "majorant.csv").string(), [&](std::ostream& out) { io::write_density(out, maj); });

  const auto [lo, hi] = std::minmax_element(df.values().begin(), df.values().end());
  json cert{{"schema_version", kSchemaVersion},
            {"degree", params.degree},
            {"stability_cap", params.cap(cs.dim())},
            {"samples", df.size()},
            {"rho_min", *lo},
            {"rho_max", *hi},
            {"slow_growth", {{"epsilon", eps}, {"c_sg", c_sg}}},
            {"self_majorization", {{"r", r}, {"c_sm", c_sm}}},
            {"transfer_sm_to_sg", {{"epsilon", sm_to_sg.epsilon}, {"c_sg", sm_to_sg.c_sg}}},
            {"transfer_sg_to_sm", {{"r", sg_to_sm.r}, {"c_sm", sg_to_sm.c_sm}}},
            {"reproduction_cache", {{"hits", cache.hits()}, {"misses", cache.misses()}}}};
  write_json_file(out_dir / "certificates.json", cert);
}

inline void run_study(const RunConfig& rc, const fs::path& out_dir) {
  const StudyConfig cfg = read_study(rc);
  const StudyResult res = convergence_study(cfg);
  io::with_output_file((out_dir / "convergence.csv").string(), [&](std::ostream& out) {
    out << "j,centers,nodes,sup_error,defect_error,rho_defect\n";
    for (const auto& row : res.rows) {
      out << row.j << "," << row.centers << "," << row.nodes << "," << io::format_real(row.sup_error) << ","
          << io::format_real(row.defect_error) << "," << io::format_real(row.rho_defect) << "\n";
    }
  });
  json slopes{{"schema_version", kSchemaVersion},
              {"placement", cfg.placement == Placement::Uniform ? "uniform" : "multires"},
              {"levels", cfg.levels},
              {"global_slope", res.global_slope},
              {"defect_slope", res.defect_slope},
              {"predicted_global_rate", 2 * cfg.k}};
  write_json_file(out_dir / "slopes.json", slopes);
}

struct Certified {
  double c_sm;
  double r;
};

inline Certified read_certificates(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open certificates '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("certificates '" + path.string() + "' are not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("self_majorization")) {
    throw InputError("certificates '" + path.string() + "': missing self_majorization constants");
  }
  const auto& sm = doc.at("self_majorization");
  if (!sm.is_object() || !sm.contains("c_sm") || !sm.contains("r") || !sm.at("c_sm").is_number() ||
      !sm.at("r").is_number()) {
    throw InputError("certificates '" + path.string() + "': self_majorization needs numeric c_sm and r");
  }
  Certified c{sm.at("c_sm").get<double>(), sm.at("r").get<double>()};
  if (!(c.c_sm > 0.0) || !(c.r > 0.0)) throw InputError("certificates: c_sm and r must be positive");
  return c;
}

/// Writes its outputs, then throws UnderSampledDensity if any cube support
/// held no density sample.
inline void run_dyadic(const RunConfig& rc, const fs::path& out_dir) {
  const KernelChoice kc = read_kernel(require_block(rc.kernel, "kernel"));
  const DyadicConfig dc = read_dyadic(require_block(rc.dyadic, "dyadic"), kc.k);
  const Inputs in = read_inputs(rc);
  if (!in.density) throw InputError("config: inputs.density is required");
  if (!in.certificates) throw InputError("config: inputs.certificates is required (certified c_sm and r)");
  const Certified cert = read_certificates(*in.certificates);
  const DensityField df =
      io::with_input_file(in.density->string(), [&](std::istream& s) { return io::read_density(s, {}, in.density->string()); });
  if (dc.box_lo.dim() != df.dim()) throw InputError("dyadic: box dimension differs from the density file");

  const auto cubes = enumerate_cubes(dc.box_lo, dc.box_hi, dc.params.min_level, dc.params.max_level);
  std::vector<DyadicCube> bad;
  std::size_t good = 0, undersampled = 0;
  std::optional<std::string> first_undersampled;
  io::with_output_file((out_dir / "partition.csv").string(), [&](std::ostream& out) {
    out << "level";
    for (std::size_t a = 0; a < df.dim(); ++a) out << ",c" << (a + 1);
    out << ",gender,status,rho\n";
    for (const auto& c : cubes) {
      const auto rho = cube_density(c, df, dc.params);
      const char* status = "undersampled";
      if (!rho) {
        ++undersampled;
        if (!first_undersampled) first_undersampled = describe(c);
      } else if (c.sidelength() >= *rho) {
        status = "good";
        ++good;
      } else {
        status = "bad";
        bad.push_back(c);
      }
      out << c.level;
      for (auto v : c.corner) out << "," << v;
      out << "," << c.gender << "," << status << "," << (rho ? io::format_real(*rho) : std::string("nan")) << "\n";
    }
  });

  const double max_ratio = bad_cube_bound_check(bad, df, dc.params, cert.c_sm, cert.r);
  std::mt19937_64 rng(rc.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t bound = overlap_bound(df.dim(), dc.params.gamma);
  std::size_t max_overlap = 0;
  std::vector<double> x(df.dim());
  for (int i = 0; i < dc.overlap_points; ++i) {
    for (std::size_t a = 0; a < df.dim(); ++a) x[a] = dc.box_lo[a] + (dc.box_hi[a] - dc.box_lo[a]) * unit(rng);
    for (int level = dc.params.min_level; level <= dc.params.max_level; ++level) {
      max_overlap = std::max(max_overlap, overlap_count_at_level(level, x, dc.params));
    }
  }
  const auto tails = geometric_tail_bound(dc.params.sigma, 2.0 * kc.k, dc.params.min_level);

  json report{{"schema_version", kSchemaVersion},
              {"seed", rc.seed},
              {"gamma", dc.params.gamma},
              {"sigma", dc.params.sigma},
              {"levels", {dc.params.min_level, dc.params.max_level}},
              {"c_sm", cert.c_sm},
              {"r", cert.r},
              {"bad_cube_constant", bad_cube_constant(dc.params.gamma, cert.c_sm, cert.r)},
              {"cubes", {{"total", cubes.size()}, {"good", good}, {"bad", bad.size()}, {"undersampled", undersampled}}},
              {"max_ratio", max_ratio},
              {"bound_holds", max_ratio <= 1.0},
              {"overlap", {{"points", dc.overlap_points}, {"max_count", max_overlap}, {"bound", bound},
                           {"holds", max_overlap <= bound}}},
              {"tail_bounds", {{"good_series", tails.good_series}, {"bad_series", tails.bad_series}}}};
  write_json_file(out_dir / "bound_check.json", report);
  if (first_undersampled) {
    throw UnderSampledDensity(std::to_string(undersampled) + " cube(s) have no density sample in their support, first " +
                              *first_undersampled);
  }
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"place", "density", "study", "dyadic"};
  return names;
}

/// Runs one command and maps failures to exit codes.
inline int run(const std::string& command, const fs::path& config, const fs::path& out_dir,
               std::optional<std::uint64_t> seed, std::ostream& err = std::cerr) {
  try {
    RunConfig rc = load_config(config);
    if (seed) rc.seed = *seed;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw InputError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    if (command == "place") {
      run_place(rc, out_dir);
    } else if (command == "density") {
      run_density(rc, out_dir);
    } else if (command == "study") {
      run_study(rc, out_dir);
    } else if (command == "dyadic") {
      run_dyadic(rc, out_dir);
    } else {
      throw InputError("unknown command '" + command + "'");
    }
    return 0;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace polyharm::cli
