#include "tvexact/pw_linear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "encodings.hpp"

namespace tvexact {

using detail::AffineRow;
using detail::append_conjugate_objective;
using detail::append_fidelity_epigraph;

SimplicialMesh SimplicialMesh::uniform_1d(int n_cells, double lo, double hi) {
  if (n_cells < 1 || !(hi > lo))
    throw std::invalid_argument("uniform_1d: need n_cells >= 1 and hi > lo");
  SimplicialMesh m;
  m.dim = 1;
  for (int i = 0; i <= n_cells; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / n_cells;
    m.vertices.push_back(Eigen::VectorXd::Constant(1, t));
  }
  for (int i = 0; i < n_cells; ++i) m.cells.push_back({i, i + 1});
  return m;
}

SimplicialMesh SimplicialMesh::uniform_grid_2d(int n) {
  if (n < 1) throw std::invalid_argument("uniform_grid_2d: need n >= 1");
  SimplicialMesh m;
  m.dim = 2;
  auto vid = [n](int i, int j) { return i * (n + 1) + j; };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Eigen::VectorXd v(2);
      v << static_cast<double>(i) / n, static_cast<double>(j) / n;
      m.vertices.push_back(v);
    }
  // split along the lower-left to upper-right diagonal, fixed orientation
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return m;
}

std::vector<Region> SimplicialMesh::regions() const {
  std::vector<Region> out;
  out.reserve(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    Region r;
    r.id = static_cast<int>(k);
    for (int v : cells[k]) r.vertices.push_back(vertices[v]);
    out.push_back(std::move(r));
  }
  return out;
}

int SimplicialMesh::locate(const Eigen::VectorXd& x, double tol) const {
  if (dim == 1) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      double a = vertices[cells[k][0]](0), b = vertices[cells[k][1]](0);
      if (x(0) >= std::min(a, b) - tol && x(0) <= std::max(a, b) + tol)
        return static_cast<int>(k);
    }
    return -1;
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    Eigen::MatrixXd T(dim, dim);
    for (int j = 0; j < dim; ++j) T.col(j) = vertices[c[j + 1]] - vertices[c[0]];
    Eigen::VectorXd lam = T.fullPivLu().solve(x - vertices[c[0]]);
    if (lam.minCoeff() >= -tol && lam.sum() <= 1.0 + tol) return static_cast<int>(k);
  }
  return -1;
}

void SimplicialMesh::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << dim << "\n" << vertices.size() << "\n";
  char buf[40];
  for (const auto& v : vertices) {
    for (int j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", v(j));
      os << buf << (j + 1 == dim ? "\n" : " ");
    }
  }
  os << cells.size() << "\n";
  for (const auto& c : cells) {
    for (std::size_t j = 0; j < c.size(); ++j)
      os << c[j] << (j + 1 == c.size() ? "\n" : " ");
  }
}

SimplicialMesh SimplicialMesh::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  SimplicialMesh m;
  std::size_t nv = 0, nc = 0;
  if (!(is >> m.dim >> nv)) throw std::runtime_error("mesh load: bad header");
  for (std::size_t i = 0; i < nv; ++i) {
    Eigen::VectorXd v(m.dim);
    for (int j = 0; j < m.dim; ++j) is >> v(j);
    m.vertices.push_back(std::move(v));
  }
  is >> nc;
  for (std::size_t k = 0; k < nc; ++k) {
    std::vector<int> c(m.dim + 1);
    for (int& idx : c) is >> idx;
    m.cells.push_back(std::move(c));
  }
  if (!is) throw std::runtime_error("mesh load: truncated file");
  return m;
}

double PwLinearFn::operator()(const Eigen::VectorXd& x) const { return eval_pwl(*this, x); }

double PwLinearFn::operator()(double x) const {
  return eval_pwl(*this, Eigen::VectorXd::Constant(1, x));
}

double eval_pwl(const PwLinearFn& f, const Eigen::VectorXd& x) {
  const SimplicialMesh& mesh = *f.mesh;
  int k = mesh.locate(x);
  if (k < 0) throw std::domain_error("eval_pwl: point outside the mesh");
  const auto& c = mesh.cells[k];
  if (mesh.dim == 1) {
    double a = mesh.vertices[c[0]](0), b = mesh.vertices[c[1]](0);
    double w = (x(0) - a) / (b - a);
    return (1.0 - w) * f.vertex_values(c[0]) + w * f.vertex_values(c[1]);
  }
  Eigen::MatrixXd T(mesh.dim, mesh.dim);
  for (int j = 0; j < mesh.dim; ++j)
    T.col(j) = mesh.vertices[c[j + 1]] - mesh.vertices[c[0]];
  Eigen::VectorXd lam = T.fullPivLu().solve(x - mesh.vertices[c[0]]);
  double v = (1.0 - lam.sum()) * f.vertex_values(c[0]);
  for (int j = 0; j < mesh.dim; ++j) v += lam(j) * f.vertex_values(c[j + 1]);
  return v;
}

Eigen::MatrixXd assemble_M(const Eigen::MatrixXd& kernel_cols,
                           const std::vector<PwLinearFn>& rho,
                           const std::vector<Eigen::VectorXd>& nodes) {
  const int m = static_cast<int>(rho.size());
  const int r = static_cast<int>(kernel_cols.cols());
  if (r > 0 && kernel_cols.rows() != m)
    throw std::invalid_argument("assemble_M: kernel block rows != m");
  Eigen::MatrixXd M(m, r + static_cast<int>(nodes.size()));
  if (r > 0) M.leftCols(r) = kernel_cols;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    for (int i = 0; i < m; ++i) M(i, r + static_cast<int>(j)) = eval_pwl(rho[i], nodes[j]);
  return M;
}

namespace {

VertexSolveInfo info_from(const ConicSolution& sol) {
  VertexSolveInfo info;
  info.status = sol.status;
  info.primal_residual = sol.primal_residual;
  info.dual_residual = sol.dual_residual;
  info.conic_gap = sol.gap;
  info.iterations = sol.iterations;
  return info;
}

}  // namespace

VertexPrimalProgram build_vertex_primal(const SimplicialMesh& mesh,
                                        const std::vector<PwLinearFn>& rho,
                                        const Eigen::MatrixXd& kernel_cols,
                                        const Fidelity& f) {
  const int m = static_cast<int>(rho.size());
  if (f.m() != m) throw std::invalid_argument("build_vertex_primal: fidelity length != m");
  const int r = static_cast<int>(kernel_cols.cols());
  const int V = static_cast<int>(mesh.vertices.size());

  ProblemBuilder B;
  VertexPrimalProgram prog;
  prog.r = r;
  prog.n_vertices = V;
  prog.c_offset = B.add_vars(r, 0.0);
  prog.dpos_offset = B.add_vars(V, 1.0);
  prog.dneg_offset = B.add_vars(V, 1.0);

  std::vector<AffineRow> y(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < r; ++k) y[i].terms.push_back({prog.c_offset + k, kernel_cols(i, k)});
    for (int j = 0; j < V; ++j) {
      double v = rho[i].vertex_values(j);
      if (v != 0.0) {
        y[i].terms.push_back({prog.dpos_offset + j, v});
        y[i].terms.push_back({prog.dneg_offset + j, -v});
      }
    }
  }
  append_fidelity_epigraph(B, f, y);
  int nn = B.begin_block(ConeSpec::nonneg(2 * V));
  for (int j = 0; j < V; ++j) {
    B.set_entry(nn + j, prog.dpos_offset + j, -1.0);
    B.set_entry(nn + V + j, prog.dneg_offset + j, -1.0);
  }
  prog.problem = B.build();
  return prog;
}

VertexPrimalResult solve_vertex_primal(const SimplicialMesh& mesh,
                                       const std::vector<PwLinearFn>& rho,
                                       const Eigen::MatrixXd& kernel_cols,
                                       const Fidelity& f,
                                       const SolverSettings& settings,
                                       double amp_threshold) {
  VertexPrimalProgram prog = build_vertex_primal(mesh, rho, kernel_cols, f);
  const int V = prog.n_vertices;

  ConicSolution sol = solve(prog.problem, settings);

  VertexPrimalResult res;
  res.kernel_coeffs.resize(prog.r);
  for (int k = 0; k < prog.r; ++k) res.kernel_coeffs(k) = sol.x(prog.c_offset + k);
  std::vector<Atom> atoms;
  for (int j = 0; j < V; ++j) {
    double d = sol.x(prog.dpos_offset + j) - sol.x(prog.dneg_offset + j);
    if (std::abs(d) >= amp_threshold) atoms.emplace_back(mesh.vertices[j], d);
  }
  res.measure = DiscreteMeasure(mesh.dim, std::move(atoms));
  res.info = info_from(sol);
  res.info.objective = sol.objective;
  return res;
}

VertexDualResult solve_vertex_dual(const SimplicialMesh& mesh,
                                   const std::vector<PwLinearFn>& rho,
                                   const Eigen::MatrixXd& kernel_cols,
                                   const Fidelity& f,
                                   const SolverSettings& settings) {
  const int m = static_cast<int>(rho.size());
  if (f.m() != m) throw std::invalid_argument("solve_vertex_dual: fidelity length != m");
  const int r = static_cast<int>(kernel_cols.cols());
  const int V = static_cast<int>(mesh.vertices.size());

  ProblemBuilder B;
  int q0 = B.add_vars(m, 0.0);

  // |sum_i q_i rho_i(v_j)| <= 1: two nonnegative rows per vertex
  int row = B.begin_block(ConeSpec::nonneg(2 * V));
  for (int j = 0; j < V; ++j) {
    for (int i = 0; i < m; ++i) {
      double v = rho[i].vertex_values(j);
      if (v == 0.0) continue;
      B.set_entry(row + j, q0 + i, v);        // 1 - eta(v_j) >= 0
      B.set_entry(row + V + j, q0 + i, -v);   // 1 + eta(v_j) >= 0
    }
    B.set_rhs(row + j, 1.0);
    B.set_rhs(row + V + j, 1.0);
  }
  if (r > 0) {
    int kr = B.begin_block(ConeSpec::zero(r));
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < m; ++i) B.set_entry(kr + k, q0 + i, kernel_cols(i, k));
  }
  append_conjugate_objective(B, f, q0);

  ConicSolution sol = solve(B.build(), settings);

  VertexDualResult res;
  res.q.resize(m);
  for (int i = 0; i < m; ++i) res.q(i) = sol.x(q0 + i);
  res.objective = -sol.objective;  // sup -f* = -(min f*)
  res.info = info_from(sol);
  res.info.objective = res.objective;
  return res;
}

DiscreteMeasure sparsify_solution(const DiscreteMeasure& mu, const SimplicialMesh& mesh,
                                  double amp_threshold) {
  return sparsify_in_regions(mu, mesh.regions(), amp_threshold);
}

std::vector<PwLinearFn> random_pwl_measurements(
    const std::shared_ptr<const SimplicialMesh>& mesh, int m, Rng& rng) {
  if (m < 0) throw std::invalid_argument("random_pwl_measurements: m must be >= 0");
  std::vector<PwLinearFn> fns;
  fns.reserve(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd vals(mesh->vertices.size());
    for (int j = 0; j < vals.size(); ++j) vals(j) = rng.gaussian();
    fns.push_back(PwLinearFn{mesh, std::move(vals)});
  }
  return fns;
}

PwLinearFn linearize_on_mesh(const std::shared_ptr<const SimplicialMesh>& mesh,
                             const std::function<double(const Eigen::VectorXd&)>& fn) {
  Eigen::VectorXd vals(mesh->vertices.size());
  for (std::size_t j = 0; j < mesh->vertices.size(); ++j)
    vals(static_cast<int>(j)) = fn(mesh->vertices[j]);
  return PwLinearFn{mesh, std::move(vals)};
}

Eigen::VectorXd measure_with_pwl(const std::vector<PwLinearFn>& rho,
                                 const Eigen::MatrixXd& kernel_cols,
                                 const DiscreteMeasure& mu,
                                 const Eigen::VectorXd& kernel_coeffs) {
  const int m = static_cast<int>(rho.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i)
    for (const Atom& a : mu.atoms()) b(i) += a.weight * eval_pwl(rho[i], a.position);
  if (kernel_cols.cols() > 0) b += kernel_cols * kernel_coeffs;
  return b;
}

void write_pwl_csv(const std::string& path, const std::vector<PwLinearFn>& fns) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[40];
  for (const auto& f : fns) {
    for (int j = 0; j < f.vertex_values.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", f.vertex_values(j));
      os << buf << (j + 1 == f.vertex_values.size() ? "\n" : ",");
    }
  }
}

std::vector<PwLinearFn> read_pwl_csv(const std::string& path,
                                     const std::shared_ptr<const SimplicialMesh>& mesh) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<PwLinearFn> fns;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != mesh->vertices.size())
      throw std::runtime_error("pwl csv: row length != vertex count");
    fns.push_back(PwLinearFn{mesh, Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size())});
  }
  return fns;
}

}  // namespace tvexact
