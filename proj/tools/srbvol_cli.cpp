// srbvol command-line front end.
#include "srbvol/acceptance.hpp"
#include "srbvol/checks.hpp"
#include "srbvol/error.hpp"
#include "srbvol/format.hpp"
#include "srbvol/geometry.hpp"
#include "srbvol/lyapunov.hpp"
#include "srbvol/manifold.hpp"
#include "srbvol/srb.hpp"
#include "srbvol/systems.hpp"
#include "srbvol/volume.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace srbvol;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kNumerical = 2, kVerification = 3 };

struct RunConfig {
  std::string command;
  std::string space;
  std::string system = "solenoid";
  std::string config;
  std::uint64_t seed = 1;
  long steps = 0;    // 0: command default
  double tol = 0.0;  // 0: command default
  std::string out;
  std::string format = "both";
  bool plot = false;
  int workers = 1;
  std::string level = "full";
  // command specific
  std::string matrix;
  std::string basis;
  std::string complement;
  std::string other;
  int index = -1;
  int nodes = 65;
  double radius = 0.5;
  long points = 0;
  int bins = 64;
  int k = -1;
  int rows = 500;
};

// Config-file and environment plumbing: every option knows how to read
// itself from a JSON value.
struct Binding {
  CLI::Option* option;
  std::string key;
  std::function<void(const json&)> assign;
};

template <class T>
std::function<void(const json&)> setter(T& target) {
  return [&target](const json& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      target = v.is_string() ? v.get<std::string>() : v.dump();
    } else {
      target = v.get<T>();
    }
  };
}

class Options {
 public:
  explicit Options(CLI::App& app) : app_(app) {}

  template <class T>
  CLI::Option* add(CLI::App* sub, const std::string& name, T& target, const std::string& help) {
    CLI::Option* opt = sub->add_option("--" + name, target, help);
    opt->envname(env_name(name));
    bindings_.push_back({opt, name, setter(target)});
    return opt;
  }

  CLI::Option* flag(CLI::App* sub, const std::string& name, bool& target, const std::string& help) {
    CLI::Option* opt = sub->add_flag("--" + name, target, help);
    opt->envname(env_name(name));
    bindings_.push_back({opt, name, setter(target)});
    return opt;
  }

  /// Fills options not given on the command line or in the environment.
  void apply_config(const json& j, const CLI::App* active) {
    if (!j.is_object()) throw InputError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "command") {
        if (value.get<std::string>() != active->get_name()) {
          throw InputError("config is for command '" + value.get<std::string>() + "'");
        }
        continue;
      }
      bool known = false;
      for (auto& b : bindings_) {
        if (b.key != key || !owned_by(b.option, active)) continue;
        known = true;
        if (b.option->count() == 0) b.assign(value);
      }
      if (!known) throw InputError("config key '" + key + "' does not apply to '" + active->get_name() + "'");
    }
  }

 private:
  static std::string env_name(const std::string& name) {
    std::string env = "SRBVOL_";
    for (char c : name) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return env;
  }
  bool owned_by(const CLI::Option* opt, const CLI::App* active) const {
    for (const auto* o : active->get_options()) {
      if (o == opt) return true;
    }
    for (const auto* o : app_.get_options()) {
      if (o == opt) return true;
    }
    return false;
  }

  CLI::App& app_;
  std::vector<Binding> bindings_;
};

std::string num(double x, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<double> numbers(const std::string& text) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == ';'; }, ' ');
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + tok + "'");
    }
  }
  return out;
}

/// "e1,e3" or explicit vectors "1,0,0;0,1,1" (one vector per ';').
Matrix parse_basis(const std::string& text, int dim) {
  if (text.empty()) return Matrix::Identity(dim, dim);
  if (text[0] == 'e') {
    std::vector<int> idx;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.size() < 2 || tok[0] != 'e') throw InputError("basis entry '" + tok + "' is not e<i>");
      const int i = std::stoi(tok.substr(1));
      if (i < 1 || i > dim) throw InputError("basis vector " + tok + " outside R^" + std::to_string(dim));
      idx.push_back(i - 1);
    }
    Matrix b = Matrix::Zero(dim, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) b(idx[c], static_cast<Eigen::Index>(c)) = 1.0;
    return b;
  }
  std::vector<std::vector<double>> cols;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ';')) cols.push_back(numbers(tok));
  Matrix b(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (static_cast<int>(cols[c].size()) != dim) {
      throw InputError("basis vector " + std::to_string(c + 1) + " needs " + std::to_string(dim) + " entries");
    }
    for (int r = 0; r < dim; ++r) b(r, static_cast<Eigen::Index>(c)) = cols[c][static_cast<std::size_t>(r)];
  }
  return b;
}

Matrix parse_matrix(const std::string& text, int dim) {
  const auto v = numbers(text);
  if (static_cast<int>(v.size()) != dim * dim) {
    throw InputError("--matrix needs " + std::to_string(dim * dim) + " entries (row-major), got " +
                     std::to_string(v.size()));
  }
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) m(r, c) = v[static_cast<std::size_t>(r * dim + c)];
  }
  return m;
}

NormedSpace space_of(const RunConfig& cfg, const std::string& fallback = "lp:2:2") {
  const std::string& s = cfg.space.empty() ? fallback : cfg.space;
  if (!s.empty() && s[0] == '{') return NormedSpace::from_json(json::parse(s));
  return NormedSpace::parse(s);
}

SmoothSystem system_of(const RunConfig& cfg) {
  std::optional<NormedSpace> space;
  if (!cfg.space.empty()) space = space_of(cfg);
  SmoothSystem sys = !cfg.system.empty() && cfg.system[0] == '{'
                         ? system_from_json(json::parse(cfg.system), space)
                         : parse_system(cfg.system, space);
  validate_system(sys);
  return sys;
}

// Output files ----------------------------------------------------------

struct Artifact {
  Table table;
  Metadata meta;
  json result;
  std::vector<std::pair<std::string, std::string>> svgs;  // (suffix, document)
};

Metadata base_meta(const RunConfig& cfg) {
  Metadata m{{"command", cfg.command}, {"seed", std::to_string(cfg.seed)}};
  return m;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
}

void emit(const RunConfig& cfg, const Artifact& a) {
  if (cfg.out.empty()) {
    if (cfg.plot) throw InputError("--plot needs --out");
    return;
  }
  fs::create_directories(cfg.out);
  const fs::path base = fs::path(cfg.out) / cfg.command;
  if (cfg.format == "csv" || cfg.format == "both") write_file(base.string() + ".csv", to_csv(a.table, a.meta));
  if (cfg.format == "json" || cfg.format == "both") {
    json meta = json::object();
    for (const auto& [k, v] : a.meta) meta[k] = v;
    write_file(base.string() + ".json", to_json_text({{"meta", meta}, {"result", a.result}}));
  }
  if (cfg.plot) {
    for (const auto& [suffix, svg] : a.svgs) write_file(base.string() + suffix + ".svg", svg);
  }
}

Table report_table(const BoundReport& r) {
  Table t = r.table();
  for (const auto& [k, v] : r.constants) t.push_back({"constant:" + k, fmt_double(v), "", "", "", "", ""});
  return t;
}

// Commands --------------------------------------------------------------

MonteCarloOptions mc_of(const RunConfig& cfg) {
  MonteCarloOptions mc;
  mc.seed = cfg.seed;
  mc.workers = cfg.workers;
  if (cfg.tol > 0) mc.target_rel_err = cfg.tol;
  return mc;
}

int cmd_volume(const RunConfig& cfg) {
  const auto space = space_of(cfg);
  const Frame frame(space, parse_basis(cfg.basis, space.dim()));
  const auto mc = mc_of(cfg);
  const auto vol = induced_volume_parallelepiped(frame, mc);
  const auto ball = unit_ball_coord_volume(frame, mc);
  std::cout << num(vol.value) << "\n";
  std::cout << "# std_error=" << num(vol.std_error) << " unit_ball_coord_volume=" << num(ball.value)
            << " method=" << to_string(vol.method) << "\n";
  Artifact a;
  a.meta = base_meta(cfg);
  a.meta.push_back({"space", space.describe()});
  a.meta.push_back({"target_rel_err", fmt_double(mc.target_rel_err)});
  a.table = {{"quantity", "value", "std_error", "n_samples", "method"},
             {"parallelepiped_volume", fmt_double(vol.value), fmt_double(vol.std_error),
              std::to_string(vol.n_samples), to_string(vol.method)},
             {"unit_ball_coord_volume", fmt_double(ball.value), fmt_double(ball.std_error),
              std::to_string(ball.n_samples), to_string(ball.method)}};
  a.result = {{"parallelepiped_volume", json_number(vol.value)},
              {"std_error", json_number(vol.std_error)},
              {"unit_ball_coord_volume", json_number(ball.value)},
              {"unit_ball_std_error", json_number(ball.std_error)},
              {"method", to_string(vol.method)},
              {"reached_target", vol.reached_target}};
  emit(cfg, a);
  return kOk;
}

int cmd_det(const RunConfig& cfg) {
  const auto space = space_of(cfg);
  if (cfg.matrix.empty()) throw InputError("det needs --matrix");
  const auto map = LinearMap::dense(parse_matrix(cfg.matrix, space.dim()));
  const Frame frame(space, parse_basis(cfg.basis, space.dim()));
  const auto d = det_restricted(map, frame, mc_of(cfg));
  std::cout << num(d.value) << "\n";
  if (d.method == VolumeMethod::monte_carlo) std::cout << "# std_error_log=" << num(d.std_error_log) << "\n";
  Artifact a;
  a.meta = base_meta(cfg);
  a.meta.push_back({"space", space.describe()});
  a.table = {{"det", "log_det", "std_error_log", "n_samples", "method", "degenerate"},
             {fmt_double(d.value), fmt_double(d.log_value), fmt_double(d.std_error_log),
              std::to_string(d.n_samples), to_string(d.method), d.degenerate ? "true" : "false"}};
  a.result = {{"det", json_number(d.value)},
              {"log_det", json_number(d.log_value)},
              {"std_error_log", json_number(d.std_error_log)},
              {"method", to_string(d.method)},
              {"degenerate", d.degenerate}};
  emit(cfg, a);
  return kOk;
}

int cmd_geometry(const RunConfig& cfg) {
  const auto space = space_of(cfg);
  const int dim = space.dim();
  GeometryOptions geo;
  geo.seed = cfg.seed;
  if (cfg.tol > 0) geo.rel_tol = cfg.tol;
  const Frame e(space, parse_basis(cfg.basis.empty() ? "e1" : cfg.basis, dim));
  const Splitting s = cfg.complement.empty() ? complement(e, geo)
                                             : projection_and_angle(e, Frame(space, parse_basis(cfg.complement, dim)),
                                                                    true, geo);
  BoundReport checks = check_splitting(s, geo);
  std::vector<std::pair<std::string, double>> values{{"projection_norm", s.proj_norm}, {"angle", s.angle}};
  if (s.reverse_angle) values.push_back({"reverse_angle", *s.reverse_angle});
  if (!cfg.other.empty()) {
    const Frame e2(space, parse_basis(cfg.other, dim));
    const auto gap = gap_distances(e, e2, geo);
    values.push_back({"aperture", gap.delta_a});
    values.push_back({"hausdorff_distance", gap.d_h});
    checks.append(check_perturbed_splitting(e, e2, s.f, geo));
  }
  for (const auto& [k, v] : values) std::cout << k << " " << num(v) << "\n";
  std::cout << "# " << checks.failures() << " failing of " << checks.evaluated() << " checks\n";
  Artifact a;
  a.meta = base_meta(cfg);
  a.meta.push_back({"space", space.describe()});
  a.table = report_table(checks);
  for (const auto& [k, v] : values) a.table.push_back({"value:" + k, fmt_double(v), "", "", "", "", ""});
  json vals = json::object();
  for (const auto& [k, v] : values) vals[k] = json_number(v);
  std::vector<std::vector<double>> comp;
  for (int c = 0; c < s.f.k(); ++c) {
    const Vector v = s.f.vec(c);
    comp.emplace_back(v.data(), v.data() + v.size());
  }
  a.result = {{"values", vals}, {"complement_basis", comp}, {"checks", checks.to_json()}};
  emit(cfg, a);
  return checks.all_pass() ? kOk : kVerification;
}

int cmd_verify_bounds(const RunConfig& cfg) {
  SubspaceBoundsConfig c;
  c.min_rows = cfg.rows;
  c.seed = cfg.seed;
  c.workers = cfg.workers;
  c.mc.workers = cfg.workers;
  if (cfg.tol > 0) c.mc.target_rel_err = cfg.tol;
  if (!cfg.space.empty()) {
    c.norms = {space_of(cfg)};
    c.dim = c.norms[0].dim();
    c.max_k = std::min(c.max_k, c.dim);
  }
  const BoundReport r = verify_subspace_bounds(c);
  std::cout << r.failures() << " failing of " << r.evaluated() << " evaluated rows\n";
  for (const auto& [k, v] : r.constants) std::cout << k << " " << num(v) << "\n";
  Artifact a;
  a.meta = base_meta(cfg);
  a.meta.push_back({"rows", std::to_string(cfg.rows)});
  a.table = report_table(r);
  a.result = r.to_json();
  emit(cfg, a);
  return r.all_pass() ? kOk : kVerification;
}

LyapunovOptions lyap_options(const RunConfig& cfg, long default_steps) {
  LyapunovOptions lo;
  lo.n_steps = cfg.steps > 0 ? cfg.steps : default_steps;
  lo.seed = cfg.seed;
  lo.k = cfg.k;
  lo.mc.workers = cfg.workers;
  return lo;
}

Metadata system_meta(const RunConfig& cfg, const SmoothSystem& sys) {
  Metadata m = base_meta(cfg);
  m.push_back({"system", sys.kind});
  m.push_back({"params", sys.params.dump()});
  m.push_back({"space", sys.space.describe()});
  return m;
}

int cmd_lyap(const RunConfig& cfg) {
  const auto sys = system_of(cfg);
  const auto lo = lyap_options(cfg, 100000);
  const auto rep = lyapunov_spectrum(sys, sys.attractor_point(), lo);
  for (std::size_t i = 0; i < rep.exponents.size(); ++i) {
    std::cout << "lambda_" << i + 1 << " " << num(rep.exponents[i], "%.6f") << "\n";
  }
  std::cout << "# unstable_dim=" << rep.unstable_dim << " steps=" << rep.n_steps << "\n";
  Artifact a;
  a.meta = system_meta(cfg, sys);
  a.meta.push_back({"steps", std::to_string(lo.n_steps)});
  a.table.push_back({"j", "exponent", "sigma", "sum", "sum_sigma"});
  for (std::size_t i = 0; i < rep.exponents.size(); ++i) {
    a.table.push_back({std::to_string(i + 1), fmt_double(rep.exponents[i]), fmt_double(rep.sigma[i]),
                       fmt_double(rep.sums[i]), fmt_double(rep.sums_sigma[i])});
  }
  a.result = rep.to_json();
  std::vector<Series> series;
  for (std::size_t j = 0; j < rep.sums.size(); ++j) {
    Series s;
    s.label = "S_" + std::to_string(j + 1);
    for (std::size_t t = 0; t < rep.trace_steps.size(); ++t) {
      s.x.push_back(static_cast<double>(rep.trace_steps[t]));
      s.y.push_back(rep.trace[j][t]);
    }
    series.push_back(s);
  }
  a.svgs.push_back({"", svg_plot("running volume growth rates", "step", "S_j", series)});
  emit(cfg, a);
  return kOk;
}

struct ManifoldSetup {
  LyapunovReport spectrum;
  AdaptedNormParams params;
  int m_u = 0;
};

ManifoldSetup setup_manifold(const RunConfig& cfg, const SmoothSystem& sys) {
  ManifoldSetup s;
  s.spectrum = lyapunov_spectrum(sys, sys.attractor_point(), lyap_options(cfg, 20000));
  s.m_u = s.spectrum.unstable_dim;
  if (s.m_u < 1) throw HyperbolicityError("system has no positive exponent");
  if (s.m_u > 2) throw UnsupportedDimensionError("leaf graphs support m_u <= 2");
  s.params = AdaptedNormParams::from_exponents(s.spectrum.distinct);
  return s;
}

ManifoldOptions manifold_options(const RunConfig& cfg) {
  ManifoldOptions mo;
  mo.grid.nodes = cfg.nodes;
  mo.grid.radius = cfg.radius;
  if (cfg.tol > 0) mo.tol = cfg.tol;
  if (mo.grid.nodes < 5 || mo.grid.nodes % 2 == 0) throw InputError("--nodes must be odd and at least 5");
  return mo;
}

int cmd_unstable(const RunConfig& cfg) {
  const auto sys = system_of(cfg);
  const auto setup = setup_manifold(cfg, sys);
  const int index = cfg.index >= 0 ? cfg.index : setup.params.max_terms + 50;
  const int length = std::max(index, setup.params.max_terms) + setup.params.max_terms + 10;
  const auto orbit = split_orbit(sys, sys.attractor_point(), length, setup.m_u, 80, cfg.seed);
  const auto man = local_unstable_manifold(sys, orbit, index, manifold_options(cfg));
  const auto checks = leaf_checks(sys, orbit, man, setup.params);
  const auto& leaf = man.leaf();
  std::cout << "depth " << man.depth << "\n";
  std::cout << "lipschitz " << num(leaf.lipschitz(sys.space)) << "\n";
  std::cout << "convergence " << num(man.convergence.empty() ? 0.0 : man.convergence.back()) << "\n";
  std::cout << "# " << checks.failures() << " failing of " << checks.evaluated() << " leaf checks\n";

  Artifact a;
  a.meta = system_meta(cfg, sys);
  a.meta.push_back({"index", std::to_string(index)});
  a.meta.push_back({"nodes", std::to_string(cfg.nodes)});
  a.meta.push_back({"radius", fmt_double(cfg.radius)});
  std::vector<std::string> head;
  for (int i = 0; i < setup.m_u; ++i) head.push_back("a_" + std::to_string(i + 1));
  for (int i = 0; i < leaf.chart().m_s(); ++i) head.push_back("g_" + std::to_string(i + 1));
  a.table.push_back(head);
  json nodes = json::array();
  for (int j = 0; j < leaf.size(); ++j) {
    std::vector<std::string> row;
    const Vector u = leaf.node(j);
    const Vector& g = leaf.value(j);
    for (Eigen::Index i = 0; i < u.size(); ++i) row.push_back(fmt_double(u[i]));
    for (Eigen::Index i = 0; i < g.size(); ++i) row.push_back(fmt_double(g[i]));
    a.table.push_back(row);
    json gv = json::array();
    for (Eigen::Index i = 0; i < g.size(); ++i) gv.push_back(json_number(g[i]));
    json uv = json::array();
    for (Eigen::Index i = 0; i < u.size(); ++i) uv.push_back(json_number(u[i]));
    nodes.push_back({{"a", uv}, {"g", gv}});
  }
  json conv = json::array();
  for (double c : man.convergence) conv.push_back(json_number(c));
  a.result = {{"depth", man.depth},
              {"lipschitz", json_number(leaf.lipschitz(sys.space))},
              {"convergence", conv},
              {"nodes", nodes},
              {"checks", checks.to_json()}};
  if (setup.m_u == 1) {
    std::vector<Series> series;
    for (int i = 0; i < leaf.chart().m_s(); ++i) {
      Series s;
      s.label = "g_" + std::to_string(i + 1);
      for (int j = 0; j < leaf.size(); ++j) {
        s.x.push_back(leaf.node(j)[0]);
        s.y.push_back(leaf.value(j)[i]);
      }
      series.push_back(s);
    }
    a.svgs.push_back({"", svg_plot("local unstable leaf", "a", "g(a)", series)});
  }
  emit(cfg, a);
  return checks.all_pass() ? kOk : kVerification;
}

struct LeafAndTable {
  UnstableManifold manifold;
  DistortionTable table;
};

LeafAndTable distortion_at(const RunConfig& cfg, const SmoothSystem& sys, const ManifoldSetup& setup, int index) {
  const auto orbit = split_orbit(sys, sys.attractor_point(), index + 10, setup.m_u, 80, cfg.seed);
  auto mo = manifold_options(cfg);
  mo.min_depth = std::min(100, index - 1);
  auto man = local_unstable_manifold(sys, orbit, index, mo);
  auto table = distortion_table(sys, man, orbit);
  return {std::move(man), std::move(table)};
}

int cmd_distortion(const RunConfig& cfg) {
  const auto sys = system_of(cfg);
  const auto setup = setup_manifold(cfg, sys);
  const int index = cfg.index >= 0 ? cfg.index : 150;
  const auto [man, t] = distortion_at(cfg, sys, setup, index);
  std::cout << "rho " << num(t.rho) << "\n";
  std::cout << "r_squared " << num(t.r_squared) << "\n";
  std::cout << "lipschitz " << num(t.lipschitz) << "\n";
  std::cout << "# terms=" << t.terms << " fit_points=" << t.fit_points << "\n";
  Artifact a;
  a.meta = system_meta(cfg, sys);
  a.meta.push_back({"index", std::to_string(index)});
  a.table.push_back({"node", "log_delta", "tail_bound", "log_ju"});
  for (std::size_t j = 0; j < t.nodes.size(); ++j) {
    std::ostringstream node;
    for (Eigen::Index i = 0; i < t.nodes[j].size(); ++i) node << (i ? " " : "") << fmt_double(t.nodes[j][i]);
    a.table.push_back({node.str(), fmt_double(t.log_delta[j]), fmt_double(t.tail_bound[j]), fmt_double(t.log_ju[j])});
  }
  a.result = t.to_json();
  if (setup.m_u == 1) {
    Series s;
    s.label = "log Delta";
    for (std::size_t j = 0; j < t.nodes.size(); ++j) {
      s.x.push_back(t.nodes[j][0]);
      s.y.push_back(t.log_delta[j]);
    }
    a.svgs.push_back({"", svg_plot("distortion along the leaf", "a", "log Delta", {s})});
  }
  Series tail;
  tail.label = "log10 tail sum";
  for (std::size_t n = 0; n < t.tail_sums.size(); ++n) {
    if (t.tail_sums[n] <= 0) continue;
    tail.x.push_back(static_cast<double>(n + 1));
    tail.y.push_back(std::log10(t.tail_sums[n]));
  }
  a.svgs.push_back({"_tail", svg_plot("distortion tail", "N", "log10 tail", {tail})});
  emit(cfg, a);
  return kOk;
}

int cmd_srb_density(const RunConfig& cfg) {
  const auto sys = system_of(cfg);
  const auto setup = setup_manifold(cfg, sys);
  if (setup.m_u != 1) throw UnsupportedDimensionError("srb-density needs m_u = 1");
  const int index = cfg.index >= 0 ? cfg.index : 150;
  const auto [man, t] = distortion_at(cfg, sys, setup, index);
  const auto q = srb_density(sys, man.leaf(), t);
  const auto masses = predicted_bin_masses(sys, man.leaf(), q, cfg.bins);
  std::optional<EmpiricalConditional> emp;
  if (cfg.points > 0) {
    EmpiricalOptions eo;
    eo.n_orbit = cfg.points;
    eo.bins = cfg.bins;
    eo.seed = cfg.seed;
    eo.workers = cfg.workers;
    emp = empirical_conditional(sys, man.leaf(), eo, &masses);
  }
  std::cout << "normalization " << num(q.normalization) << "\n";
  if (emp) std::cout << "l1 " << num(*emp->l1) << "\n# hits=" << emp->hits << " points=" << emp->n_points << "\n";

  Artifact a;
  a.meta = system_meta(cfg, sys);
  a.meta.push_back({"index", std::to_string(index)});
  a.meta.push_back({"bins", std::to_string(cfg.bins)});
  a.meta.push_back({"points", std::to_string(cfg.points)});
  a.table.push_back({"bin_lo", "bin_hi", "predicted", "empirical", "count"});
  const double r = man.leaf().grid().radius;
  for (int b = 0; b < cfg.bins; ++b) {
    const double lo = -r + 2 * r * b / cfg.bins, hi = -r + 2 * r * (b + 1) / cfg.bins;
    const auto bi = static_cast<std::size_t>(b);
    a.table.push_back({fmt_double(lo), fmt_double(hi), fmt_double(masses[bi]),
                       emp ? fmt_double(emp->histogram[bi]) : "", emp ? std::to_string(emp->counts[bi]) : ""});
  }
  json pm = json::array();
  for (double m : masses) pm.push_back(json_number(m));
  a.result = {{"profile", q.to_json()}, {"predicted_bin_masses", pm}};
  if (emp) a.result["empirical"] = emp->to_json();
  Series pred{"predicted", {}, {}, "", true};
  Series obs{"empirical", {}, {}, "", true};
  for (int b = 0; b < cfg.bins; ++b) {
    const double x = -r + 2 * r * (b + 0.5) / cfg.bins;
    pred.x.push_back(x);
    pred.y.push_back(masses[static_cast<std::size_t>(b)]);
    if (emp) {
      obs.x.push_back(x);
      obs.y.push_back(emp->histogram[static_cast<std::size_t>(b)]);
    }
  }
  std::vector<Series> series{pred};
  if (emp) series.push_back(obs);
  a.svgs.push_back({"", svg_plot("conditional density on the leaf", "a", "bin probability", series)});
  emit(cfg, a);
  return kOk;
}

int cmd_entropy_check(const RunConfig& cfg) {
  const auto sys = system_of(cfg);
  const auto spectrum = lyapunov_spectrum(sys, sys.attractor_point(), lyap_options(cfg, 100000));
  EntropyOptions eo;
  eo.seed = cfg.seed;
  if (cfg.tol > 0) eo.known_tol = cfg.tol;
  const auto rep = entropy_formula_report(sys, spectrum, eo);
  std::cout << "exponent_sum " << num(rep.exponent_sum, "%.6f") << "\n";
  std::cout << "unstable_jacobian_average " << num(rep.ju_average, "%.6f") << "\n";
  if (rep.known) std::cout << "known_entropy " << num(*rep.known, "%.6f") << "\n";
  for (const auto& n : rep.notes) std::cout << "# " << n << "\n";
  Artifact a;
  a.meta = system_meta(cfg, sys);
  a.meta.push_back({"steps", std::to_string(spectrum.n_steps)});
  a.table = report_table(rep.rows);
  a.result = rep.to_json();
  emit(cfg, a);
  return rep.rows.all_pass() ? kOk : kVerification;
}

int cmd_suite(const RunConfig& cfg) {
  SuiteOptions so;
  so.level = cfg.level;
  so.seed = cfg.seed;
  so.workers = cfg.workers;
  const auto result = run_suite(so, [](const CriterionResult& c) { std::cout << criterion_line(c) << std::endl; });
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    const fs::path base = fs::path(cfg.out) / "suite";
    if (cfg.format == "csv" || cfg.format == "both") write_file(base.string() + ".csv", result.to_csv());
    if (cfg.format == "json" || cfg.format == "both") write_file(base.string() + ".json", to_json_text(result.to_json()));
  }
  return result.all_pass() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Induced volumes, Lyapunov exponents, unstable manifolds and SRB densities"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  Options opts(app);

  opts.add(&app, "space", cfg.space, "Normed space, e.g. lp:inf:2, wsup:1,0.5, poly:1,0;0,1;1,1");
  opts.add(&app, "system", cfg.system, "Test system, e.g. solenoid, diag_linear:2,0.5, torus_linear:2,1;1,1");
  app.add_option("--config", cfg.config, "JSON config file (see docs/config.md)")->envname("SRBVOL_CONFIG");
  opts.add(&app, "seed", cfg.seed, "Master seed");
  opts.add(&app, "steps", cfg.steps, "Orbit length for exponent runs");
  opts.add(&app, "tol", cfg.tol, "Command tolerance (relative MC error, geometry tolerance, leaf tolerance)");
  opts.add(&app, "out", cfg.out, "Directory for CSV/JSON/SVG artifacts");
  opts.add(&app, "format", cfg.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
  opts.flag(&app, "plot", cfg.plot, "Also write SVG plots");
  opts.add(&app, "workers", cfg.workers, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);

  auto* volume = app.add_subcommand("volume", "Induced volume of the parallelepiped spanned by a basis");
  auto* det = app.add_subcommand("det", "det(A|E) for E spanned by a basis");
  auto* geometry = app.add_subcommand("geometry", "Projections, angles and gap distances between subspaces");
  auto* bounds_cmd = app.add_subcommand("verify-sec2", "Seeded battery of the subspace inequalities");
  auto* lyap = app.add_subcommand("lyap", "Lyapunov spectrum from volume growth");
  auto* unstable = app.add_subcommand("unstable", "Local unstable leaf by graph transform");
  auto* distortion = app.add_subcommand("distortion", "Distortion table log Delta along a leaf");
  auto* srb = app.add_subcommand("srb-density", "Conditional density on a leaf, optionally against an orbit histogram");
  auto* entropy = app.add_subcommand("entropy-check", "Positive exponent sum against the orbit average of log J^u");
  auto* suite = app.add_subcommand("suite", "Acceptance suite");

  for (auto* s : {volume, det, geometry}) opts.add(s, "basis", cfg.basis, "e1,e2 or vectors 1,0,0;0,1,1");
  opts.add(det, "matrix", cfg.matrix, "Row-major entries, e.g. \"2 0 0 3\"");
  opts.add(geometry, "complement", cfg.complement, "Complement basis (default: John-orthogonal complement)");
  opts.add(geometry, "other", cfg.other, "Second subspace for gap distances");
  opts.add(bounds_cmd, "rows", cfg.rows, "Minimum evaluated rows");
  opts.add(lyap, "k", cfg.k, "Frame size (default min(D, 4))");
  for (auto* s : {unstable, distortion, srb}) {
    opts.add(s, "index", cfg.index, "Orbit index of the base point");
    opts.add(s, "nodes", cfg.nodes, "Grid nodes per axis (odd)");
    opts.add(s, "radius", cfg.radius, "Half-width of the leaf domain");
  }
  opts.add(srb, "points", cfg.points, "Orbit points for the empirical histogram (0: skip)");
  opts.add(srb, "bins", cfg.bins, "Histogram bins")->check(CLI::PositiveNumber);
  opts.add(suite, "level", cfg.level, "full or quick")->check(CLI::IsMember({"full", "quick"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kInput;
  }

  const CLI::App* active = app.get_subcommands().front();
  cfg.command = active->get_name();
  const std::map<std::string, std::function<int(const RunConfig&)>> commands{
      {"volume", cmd_volume},         {"det", cmd_det},
      {"geometry", cmd_geometry},     {"verify-sec2", cmd_verify_bounds},
      {"lyap", cmd_lyap},             {"unstable", cmd_unstable},
      {"distortion", cmd_distortion}, {"srb-density", cmd_srb_density},
      {"entropy-check", cmd_entropy_check}, {"suite", cmd_suite}};
  try {
    if (!cfg.config.empty()) {
      std::ifstream f(cfg.config);
      if (!f) throw InputError("cannot read config " + cfg.config);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
      }
      opts.apply_config(j, active);
    }
    if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "both") {
      throw InputError("format must be csv, json or both");
    }
    return commands.at(cfg.command)(cfg);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.is_input_error() ? kInput : kNumerical;
  } catch (const json::exception& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return kInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
