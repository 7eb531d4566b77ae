#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tvexact/pipeline.hpp"
#include "tvexact/rng.hpp"

namespace tvexact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double wrap01(double t) {
  double r = t - std::floor(t);
  return r == 1.0 ? 0.0 : r;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << j.dump(2) << "\n";
}

// positions with pairwise (torus optional) separation >= min_sep
std::vector<double> draw_separated(Rng& rng, int n, double lo, double hi,
                                   double min_sep, bool torus = false) {
  std::vector<double> xs;
  int guard = 0;
  while (static_cast<int>(xs.size()) < n) {
    if (++guard > 100000)
      throw std::runtime_error("draw_separated: separation constraint infeasible");
    double x = rng.uniform(lo, hi);
    bool ok = true;
    for (double y : xs) {
      double d = torus ? std::min(std::abs(x - y), 1.0 - std::abs(x - y))
                       : std::abs(x - y);
      if (d < min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

double nonzero_amplitude(Rng& rng, double floor_abs) {
  double a = 0.0;
  do {
    a = rng.uniform(-1.0, 1.0);
  } while (std::abs(a) < floor_abs);
  return a;
}

bool measures_match(const DiscreteMeasure& truth, const DiscreteMeasure& rec,
                    double pos_tol, double w_tol, bool torus = false) {
  if (truth.size() != rec.size()) return false;
  std::vector<bool> used(rec.size(), false);
  for (const Atom& t : truth.atoms()) {
    bool found = false;
    for (std::size_t j = 0; j < rec.size(); ++j) {
      if (used[j]) continue;
      const Atom& r = rec.atoms()[j];
      double d = torus ? std::min(std::abs(t.position(0) - r.position(0)),
                                  1.0 - std::abs(t.position(0) - r.position(0)))
                       : (t.position - r.position).lpNorm<Eigen::Infinity>();
      if (d <= pos_tol && std::abs(t.weight - r.weight) <= w_tol) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// -------------------------------------------------------------------------
// (a) random piecewise-linear measurements of a sparse measure, L = Id

json run_pwl_1d_identity(const ExperimentConfig& cfg) {
  const json& ov = cfg.overrides;
  const int cells = get_or(ov, "cells", 20);
  const int m = get_or(ov, "m", 12);
  const int n_atoms = get_or(ov, "atoms", 4);
  const double eps = get_or(ov, "eps", 1e-10);

  Rng rng(cfg.seed);
  auto mesh = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_1d(cells));
  std::vector<PwLinearFn> rho = random_pwl_measurements(mesh, m, rng);

  const double h = 1.0 / cells;
  std::vector<double> xs = draw_separated(rng, n_atoms, 0.5 * h, 1.0 - 0.5 * h, 2.0 * h);
  std::vector<Atom> atoms;
  for (double x : xs) atoms.emplace_back(x, nonzero_amplitude(rng, 0.2));
  DiscreteMeasure truth(1, atoms);

  Eigen::MatrixXd kernel_cols(m, 0);
  Eigen::VectorXd b = measure_with_pwl(rho, kernel_cols, truth, Eigen::VectorXd(0));

  ProblemSpec spec;
  spec.op = RegularizerOp::identity_unit(1);
  spec.family = PwLinearFamily{mesh, rho, kernel_cols};
  spec.fidelity = Fidelity::equality_to(b);
  spec.solver.eps_abs = eps;
  spec.solver.eps_rel = eps;
  spec.purify = get_or(ov, "purify", true);
  spec.sparsify = true;

  AnalysisSolution sol = solve_analysis_problem(spec);

  ensure_dir(cfg.out_dir);
  write_atoms_csv(cfg.out_dir + "/atoms_true.csv", truth);
  write_atoms_csv(cfg.out_dir + "/atoms_raw.csv", sol.raw_measure);
  write_atoms_csv(cfg.out_dir + "/atoms_sparse.csv", sol.sparse_measure);
  write_stem_svg(cfg.out_dir + "/plot.svg",
                 {{"true", "#2ca02c", truth},
                  {"recovered", "#1f77b4", sol.raw_measure},
                  {"sparsified", "#d62728", sol.sparse_measure}});

  json rep = sol.report.to_json();
  rep["experiment"] = cfg.name;
  rep["seed"] = cfg.seed;
  rep["exact_recovery"] = measures_match(truth, sol.sparse_measure, 1e-5, 1e-5);
  rep["atom_match_error"] = atom_match_error(truth, sol.sparse_measure);
  write_json(cfg.out_dir + "/report.json", rep);
  return rep;
}

// -------------------------------------------------------------------------
// (b) piecewise-constant sampling of staircase signals, L = D

struct DerivInstance {
  std::shared_ptr<SimplicialMesh> mesh;
  std::vector<PwLinearFn> rho;
  Eigen::MatrixXd kernel_cols;
  DiscreteMeasure truth_jumps;
  double truth_offset = 0.0;  // kernel coefficient
  Eigen::VectorXd b;
};

DerivInstance make_deriv_instance(Rng& rng, int pieces, int m, int n_jumps,
                                  bool noise, double noise_p, double noise_var) {
  DerivInstance inst;
  inst.mesh = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_1d(pieces));

  std::vector<double> bp;
  for (int k = 0; k <= pieces; ++k) bp.push_back(static_cast<double>(k) / pieces);

  std::vector<Pcw1DFunction> a_list;
  RegularizerOp D = RegularizerOp::derivative_1d();
  for (int i = 0; i < m; ++i) {
    std::vector<double> vals(pieces);
    for (double& v : vals) v = rng.gaussian();
    a_list.push_back(Pcw1DFunction::constant_pieces(bp, vals));
  }
  inst.kernel_cols = kernel_pairings(D, a_list);
  for (const auto& a : a_list) {
    Pcw1DFunction r = pinv_adjoint(D, a);
    Eigen::VectorXd vv =
        Eigen::Map<const Eigen::VectorXd>(r.values().data(), r.values().size());
    inst.rho.push_back(PwLinearFn{inst.mesh, vv});
  }

  // staircase with jumps away from the grid, levels within [-1, 1]
  const double h = 1.0 / pieces;
  std::vector<double> xs;
  {
    int guard = 0;
    while (static_cast<int>(xs.size()) < n_jumps) {
      if (++guard > 100000) throw std::runtime_error("jump placement failed");
      double x = rng.uniform(0.05, 0.95);
      double to_grid = std::abs(x / h - std::lround(x / h)) * h;
      bool ok = to_grid > 0.02;
      for (double y : xs) ok = ok && std::abs(x - y) >= 2.0 * h + 0.01;
      if (ok) xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
  }
  std::vector<double> levels(n_jumps + 1);
  for (int k = 0; k <= n_jumps; ++k) levels[k] = rng.uniform(-1.0, 1.0);
  for (int k = 1; k <= n_jumps; ++k)
    if (std::abs(levels[k] - levels[k - 1]) < 0.15)
      levels[k] += (levels[k] >= levels[k - 1] ? 0.15 : -0.15);

  std::vector<Atom> jumps;
  double offset = levels[0];
  for (int k = 0; k < n_jumps; ++k) {
    double d = levels[k + 1] - levels[k];
    jumps.emplace_back(xs[k], d);
    offset += d * (1.0 - xs[k]);  // c so that c + sum d_k (1_{s>=x} - (1-x)) = u
  }
  inst.truth_jumps = DiscreteMeasure(1, jumps);
  inst.truth_offset = offset;

  Eigen::VectorXd c(1);
  c << offset;
  inst.b = measure_with_pwl(inst.rho, inst.kernel_cols, inst.truth_jumps, c);
  if (noise) {
    for (int i = 0; i < inst.b.size(); ++i) {
      double coin = rng.uniform01();
      double g = rng.gaussian();  // keep the stream aligned across variants
      if (coin < noise_p) inst.b(i) += std::sqrt(noise_var) * g;
    }
  }
  return inst;
}

json run_deriv_1d(const ExperimentConfig& cfg) {
  const json& ov = cfg.overrides;
  const int pieces = get_or(ov, "pieces", 10);
  const int m = get_or(ov, "m", 42);
  const int n_jumps = get_or(ov, "jumps", 3);
  const bool noise = get_or(ov, "noise", true);
  const double alpha = get_or(ov, "alpha", 1.0);
  const double eps = get_or(ov, "eps", 1e-10);

  Rng rng(cfg.seed);
  DerivInstance inst =
      make_deriv_instance(rng, pieces, m, n_jumps, noise, 0.1, 3.0);

  ProblemSpec spec;
  spec.op = RegularizerOp::derivative_1d();
  spec.family = PwLinearFamily{inst.mesh, inst.rho, inst.kernel_cols};
  spec.fidelity = Fidelity::l1(alpha, inst.b);
  spec.solver.eps_abs = eps;
  spec.solver.eps_rel = eps;
  spec.sparsify = true;

  AnalysisSolution sol = solve_analysis_problem(spec);

  ensure_dir(cfg.out_dir);
  write_atoms_csv(cfg.out_dir + "/atoms_true.csv", inst.truth_jumps);
  write_atoms_csv(cfg.out_dir + "/atoms_raw.csv", sol.raw_measure);
  write_atoms_csv(cfg.out_dir + "/atoms_sparse.csv", sol.sparse_measure);
  {
    std::ofstream os(cfg.out_dir + "/signal.csv");
    if (!os) throw IoError("cannot write signal.csv");
    os << "t,true,recovered\n";
    EvaluableSignal truth_sig{Eigen::VectorXd::Constant(1, inst.truth_offset),
                              inst.truth_jumps};
    char buf[128];
    for (int g = 0; g <= 1000; ++g) {
      double t = g / 1000.0;
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t,
                    eval_signal(truth_sig, spec.op, t),
                    eval_signal(sol.signal, spec.op, t));
      os << buf;
    }
  }
  write_stem_svg(cfg.out_dir + "/plot.svg",
                 {{"true jumps", "#2ca02c", inst.truth_jumps},
                  {"recovered jumps", "#d62728", sol.sparse_measure}});

  json rep = sol.report.to_json();
  rep["experiment"] = cfg.name;
  rep["seed"] = cfg.seed;
  rep["noise"] = noise;
  rep["exact_recovery"] =
      measures_match(inst.truth_jumps, sol.sparse_measure, 1e-5, 1e-5);
  rep["atom_match_error"] = atom_match_error(inst.truth_jumps, sol.sparse_measure);
  write_json(cfg.out_dir + "/report.json", rep);
  return rep;
}

// -------------------------------------------------------------------------
// (c) linearized 2-D trigonometric measurements with box constraints, L = Id

json run_2d_identity_box(const ExperimentConfig& cfg) {
  const json& ov = cfg.overrides;
  const int grid = get_or(ov, "grid", 10);
  const int order = get_or(ov, "order", 5);
  const int m = get_or(ov, "m", 30);
  const int n_atoms = get_or(ov, "atoms", 3);
  const double box_c = get_or(ov, "box_c", 100.0);
  const double eps = get_or(ov, "eps", 1e-9);

  Rng rng(cfg.seed);
  auto mesh = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_grid_2d(grid));

  // random real trig polynomials of order <= `order` in each variable,
  // sampled on the mesh vertices
  using cd = std::complex<double>;
  std::vector<PwLinearFn> rho;
  for (int i = 0; i < m; ++i) {
    std::vector<std::tuple<int, int, cd>> coeffs;
    for (int j = -order; j <= order; ++j)
      for (int k = -order; k <= order; ++k) {
        if (j < 0 || (j == 0 && k < 0)) continue;  // Hermitian half
        double decay = 1.0 / std::max(1.0, std::hypot(j, k));
        if (j == 0 && k == 0) {
          coeffs.emplace_back(j, k, cd(decay * rng.gaussian(), 0.0));
        } else {
          coeffs.emplace_back(j, k, decay * cd(rng.gaussian(), rng.gaussian()));
        }
      }
    auto fn = [coeffs](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (const auto& [j, k, g] : coeffs) {
        cd e = std::polar(1.0, -2.0 * M_PI * (j * x(0) + k * x(1)));
        v += (j == 0 && k == 0) ? g.real() : 2.0 * std::real(g * e);
      }
      return v;
    };
    rho.push_back(linearize_on_mesh(mesh, fn));
  }

  std::vector<Atom> atoms;
  {
    std::vector<double> xs = draw_separated(rng, n_atoms, 0.1, 0.9, 0.15);
    for (double x : xs) {
      Eigen::VectorXd p(2);
      p << x, rng.uniform(0.1, 0.9);
      atoms.emplace_back(p, rng.uniform01() < 0.5 ? 1.0 : -1.0);
    }
  }
  DiscreteMeasure truth(2, atoms);

  Eigen::MatrixXd kernel_cols(m, 0);
  Eigen::VectorXd b = measure_with_pwl(rho, kernel_cols, truth, Eigen::VectorXd(0));

  ProblemSpec spec;
  spec.op = RegularizerOp::identity_unit(2);
  spec.family = PwLinearFamily{mesh, rho, kernel_cols};
  spec.fidelity = Fidelity::box_quant(Eigen::VectorXd::Constant(m, box_c), b);
  spec.solver.eps_abs = eps;
  spec.solver.eps_rel = eps;
  spec.sparsify = true;

  AnalysisSolution sol = solve_analysis_problem(spec);

  ensure_dir(cfg.out_dir);
  write_atoms_csv(cfg.out_dir + "/atoms_true.csv", truth);
  write_atoms_csv(cfg.out_dir + "/atoms_raw.csv", sol.raw_measure);
  write_atoms_csv(cfg.out_dir + "/atoms_sparse.csv", sol.sparse_measure);
  write_stem_svg(cfg.out_dir + "/plot.svg",
                 {{"true", "#2ca02c", truth},
                  {"before", "#1f77b4", sol.raw_measure},
                  {"after", "#d62728", sol.sparse_measure}});

  json rep = sol.report.to_json();
  rep["experiment"] = cfg.name;
  rep["seed"] = cfg.seed;
  rep["atom_match_error"] = atom_match_error(truth, sol.sparse_measure);
  write_json(cfg.out_dir + "/report.json", rep);
  return rep;
}

// -------------------------------------------------------------------------
// (d) trigonometric degree sweep, L = Id on the torus

json run_trig_sweep(const ExperimentConfig& cfg) {
  const json& ov = cfg.overrides;
  const int m = get_or(ov, "m", 35);
  const int N = get_or(ov, "N", 50);
  const int k_min = get_or(ov, "k_min", 10);
  const int k_max = get_or(ov, "k_max", N);
  const int k_step = get_or(ov, "k_step", 1);
  const int n_spikes = get_or(ov, "spikes", 5);
  const double lambda = get_or(ov, "lambda", 100.0);
  const double displacement = get_or(ov, "displacement", 0.02);
  const double amp_floor = get_or(ov, "amp_floor", 0.0);
  const double eps = get_or(ov, "eps", 1e-8);

  Rng rng(cfg.seed);
  GammaMatrix full = random_decay_gamma(N, m, rng);

  std::vector<Atom> atoms;
  for (int i = 0; i < n_spikes; ++i) {
    double x = wrap01(static_cast<double>(i - n_spikes / 2) / n_spikes +
                      rng.uniform(-displacement, displacement));
    double a = rng.gaussian();
    while (std::abs(a) < amp_floor) a = rng.gaussian();
    atoms.emplace_back(x, a);
  }
  DiscreteMeasure truth(1, atoms);

  Eigen::VectorXd b =
      measure_with_trig(truth, Eigen::VectorXd(0), full, TrigKernelData::none(m));

  ensure_dir(cfg.out_dir);
  json sweep = json::array();
  std::ofstream sweep_csv(cfg.out_dir + "/sweep.csv");
  sweep_csv << "K,rel_input_error,recovery_error,atoms,status\n";

  for (int K = k_min; K <= k_max; K += k_step) {
    GammaMatrix sub(K, full.entries.middleRows(N - K, 2 * K + 1));
    DiscreteMeasure truth_k = truth;
    Eigen::VectorXd bk =
        measure_with_trig(truth_k, Eigen::VectorXd(0), sub, TrigKernelData::none(m));
    double rel_err = (bk - b).norm() / b.norm();

    json row{{"K", K}, {"rel_input_error", rel_err}};
    try {
      ProblemSpec spec;
      spec.op = RegularizerOp::identity_unit(1);
      spec.family = TrigFamily{sub, TrigKernelData::none(m)};
      spec.fidelity = Fidelity::quadratic(lambda, b);
      spec.solver.eps_abs = eps;
      spec.solver.eps_rel = eps;
      AnalysisSolution sol = solve_analysis_problem(spec);

      double rec_err = atom_match_error(truth, sol.sparse_measure, /*torus=*/true);
      row["recovery_error"] = rec_err;
      row["atoms"] = sol.sparse_measure.size();
      row["primal_objective"] = sol.report.primal_objective;
      row["dual_objective"] = sol.report.dual_objective;
      row["status"] = "ok";
      write_atoms_csv(cfg.out_dir + "/atoms_K" + std::to_string(K) + ".csv",
                      sol.sparse_measure);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%zu,ok\n", K, rel_err, rec_err,
                    sol.sparse_measure.size());
      sweep_csv << buf;
    } catch (const std::exception& e) {
      // a hard K must not kill the sweep
      row["status"] = std::string("failed: ") + e.what();
      sweep_csv << K << "," << rel_err << ",nan,0,failed\n";
    }
    sweep.push_back(row);
  }

  write_atoms_csv(cfg.out_dir + "/atoms_true.csv", truth);
  json rep{{"experiment", cfg.name}, {"seed", cfg.seed}, {"m", m}, {"N", N},
           {"sweep", sweep}};
  write_json(cfg.out_dir + "/report.json", rep);
  return rep;
}

}  // namespace

json run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "pwl-1d-identity") return run_pwl_1d_identity(cfg);
  if (cfg.name == "deriv-1d") return run_deriv_1d(cfg);
  if (cfg.name == "2d-identity-box") return run_2d_identity_box(cfg);
  if (cfg.name == "trig-sweep") return run_trig_sweep(cfg);
  throw SpecError("unknown experiment: " + cfg.name +
                  " (expected pwl-1d-identity, deriv-1d, 2d-identity-box, trig-sweep)");
}

// ---------------------------------------------------------------------------
// JSON problem specs

namespace {

Eigen::VectorXd parse_vector(const json& j) {
  Eigen::VectorXd v(j.size());
  int i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

Eigen::VectorXd load_vector_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

std::string resolve(const std::string& base, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base) / p).string();
}

Fidelity parse_fidelity(const json& j, const Eigen::VectorXd& b) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "equality") return Fidelity::equality_to(b);
  if (kind == "quadratic") {
    double lambda = j.at("lambda").get<double>();
    if (j.contains("c_diag")) return Fidelity::quadratic(lambda, parse_vector(j["c_diag"]), b);
    return Fidelity::quadratic(lambda, b);
  }
  if (kind == "l1") return Fidelity::l1(j.at("lambda").get<double>(), b);
  if (kind == "box") {
    if (j.contains("c_diag")) return Fidelity::box_quant(parse_vector(j["c_diag"]), b);
    double c = get_or(j, "c", 1.0);
    return Fidelity::box_quant(Eigen::VectorXd::Constant(b.size(), c), b);
  }
  if (kind == "phase_retrieval") (void)Fidelity::phase_retrieval();
  throw SpecError("unknown fidelity kind: " + kind);
}

}  // namespace

ProblemSpec parse_problem_spec(const json& j, const std::string& base_dir) {
  ProblemSpec spec;
  try {
    const json& jop = j.at("operator");
    std::string okind = jop.at("kind").get<std::string>();
    if (okind == "identity") {
      spec.op = RegularizerOp::identity_unit(get_or(jop, "dim", 1));
    } else if (okind == "derivative1d") {
      spec.op = RegularizerOp::derivative_1d(get_or(jop, "torus", false));
    } else {
      throw SpecError("unknown operator kind: " + okind);
    }

    const json& jm = j.at("measurements");
    std::string family = jm.at("family").get<std::string>();
    int m = 0;
    if (family == "pwlinear") {
      std::shared_ptr<SimplicialMesh> mesh;
      if (jm.contains("mesh_file")) {
        mesh = std::make_shared<SimplicialMesh>(
            SimplicialMesh::load(resolve(base_dir, jm["mesh_file"])));
      } else {
        int cells = jm.at("mesh_cells").get<int>();
        mesh = std::make_shared<SimplicialMesh>(
            spec.op.dim() == 1 ? SimplicialMesh::uniform_1d(cells)
                               : SimplicialMesh::uniform_grid_2d(cells));
      }
      PwLinearFamily fam;
      fam.mesh = mesh;
      if (spec.op.kind() == OpKind::Derivative1D) {
        // piecewise-constant a_i given per piece; rho derived in closed form
        std::vector<Pcw1DFunction> a_list;
        std::vector<double> bp;
        for (const auto& v : mesh->vertices) bp.push_back(v(0));
        if (jm.contains("piece_values_file")) {
          std::ifstream is(resolve(base_dir, jm["piece_values_file"]));
          if (!is) throw IoError("cannot open piece_values_file");
          std::string line;
          while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::vector<double> vals;
            std::stringstream ss(line);
            std::string tok;
            while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
            a_list.push_back(Pcw1DFunction::constant_pieces(bp, vals));
          }
        } else if (jm.contains("random")) {
          Rng rng(jm["random"].at("seed").get<std::uint64_t>());
          int mm = jm["random"].at("m").get<int>();
          for (int i = 0; i < mm; ++i) {
            std::vector<double> vals(bp.size() - 1);
            for (double& v : vals) v = rng.gaussian();
            a_list.push_back(Pcw1DFunction::constant_pieces(bp, vals));
          }
        } else {
          throw SpecError("derivative pwlinear family needs piece_values_file or random");
        }
        fam.kernel_cols = kernel_pairings(spec.op, a_list);
        for (const auto& a : a_list) {
          Pcw1DFunction rho = pinv_adjoint(spec.op, a);
          Eigen::VectorXd vv = Eigen::Map<const Eigen::VectorXd>(rho.values().data(),
                                                                 rho.values().size());
          fam.rho.push_back(PwLinearFn{mesh, vv});
        }
      } else {
        fam.kernel_cols = Eigen::MatrixXd(0, 0);
        if (jm.contains("vertex_values_file")) {
          fam.rho = read_pwl_csv(resolve(base_dir, jm["vertex_values_file"]),
                                 std::shared_ptr<const SimplicialMesh>(mesh));
        } else if (jm.contains("random")) {
          Rng rng(jm["random"].at("seed").get<std::uint64_t>());
          std::shared_ptr<const SimplicialMesh> cmesh = mesh;
          fam.rho = random_pwl_measurements(cmesh, jm["random"].at("m").get<int>(), rng);
        } else {
          throw SpecError("pwlinear family needs vertex_values_file or random");
        }
      }
      m = static_cast<int>(fam.rho.size());
      if (fam.kernel_cols.cols() == 0) fam.kernel_cols = Eigen::MatrixXd(m, 0);
      spec.family = std::move(fam);
    } else if (family == "trig") {
      TrigFamily fam;
      if (jm.contains("gamma_file")) {
        fam.gamma = GammaMatrix::load_csv(resolve(base_dir, jm["gamma_file"]));
      } else if (jm.contains("fourier_K")) {
        fam.gamma = fourier_gamma(jm["fourier_K"].get<int>());
      } else if (jm.contains("random_decay")) {
        const json& rd = jm["random_decay"];
        Rng rng(rd.at("seed").get<std::uint64_t>());
        fam.gamma = random_decay_gamma(rd.at("K").get<int>(), rd.at("m").get<int>(), rng);
      } else {
        throw SpecError("trig family needs gamma_file, fourier_K or random_decay");
      }
      m = fam.gamma.m;
      if (spec.op.kind() == OpKind::Derivative1D) {
        if (!spec.op.torus())
          throw SpecError("trig measurements require the torus derivative variant");
        if (jm.contains("kernel_rows")) {
          const json& kr = jm["kernel_rows"];
          Eigen::MatrixXd rows(kr.size(), m);
          int k = 0;
          for (const auto& rowj : kr) rows.row(k++) = parse_vector(rowj).transpose();
          fam.kernel = TrigKernelData{rows, true};
        } else {
          throw SpecError("torus-derivative trig family needs kernel_rows (A lambda)");
        }
      } else {
        fam.kernel = TrigKernelData::none(m);
      }
      spec.family = std::move(fam);
    } else {
      throw SpecError("unknown measurement family: " + family);
    }

    const json& jf = j.at("fidelity");
    Eigen::VectorXd b;
    if (jf.contains("b"))
      b = parse_vector(jf["b"]);
    else if (jf.contains("b_file"))
      b = load_vector_file(resolve(base_dir, jf["b_file"]));
    else
      throw SpecError("fidelity needs b or b_file");
    if (b.size() != m) throw SpecError("data vector length differs from m");
    spec.fidelity = parse_fidelity(jf, b);

    if (j.contains("solver")) {
      const json& js = j["solver"];
      spec.solver.eps_abs = get_or(js, "eps_abs", spec.solver.eps_abs);
      spec.solver.eps_rel = get_or(js, "eps_rel", spec.solver.eps_rel);
      spec.solver.max_iter = get_or(js, "max_iter", spec.solver.max_iter);
      spec.solver.relaxation = get_or(js, "relaxation", spec.solver.relaxation);
      spec.solver.rho = get_or(js, "rho", spec.solver.rho);
    }
    if (j.contains("pipeline")) {
      const json& jp = j["pipeline"];
      spec.purify = get_or(jp, "purify", spec.purify);
      spec.sparsify = get_or(jp, "sparsify", spec.sparsify);
      spec.amp_threshold = get_or(jp, "amp_threshold", spec.amp_threshold);
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid problem spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ProblemSpec load_problem_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid spec json: ") + e.what());
  }
  return parse_problem_spec(j, fs::path(path).parent_path().string());
}

ConicProblem export_conic(const ProblemSpec& spec) {
  spec.validate();
  if (std::holds_alternative<PwLinearFamily>(spec.family)) {
    const auto& fam = std::get<PwLinearFamily>(spec.family);
    return build_vertex_primal(*fam.mesh, fam.rho, fam.kernel_cols, spec.fidelity)
        .problem;
  }
  const auto& fam = std::get<TrigFamily>(spec.family);
  return assemble_dual_sdp(fam.gamma, fam.kernel, spec.fidelity).problem;
}

}  // namespace tvexact
