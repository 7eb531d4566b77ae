#include "tvexact/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tvexact/rng.hpp"

namespace tvexact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double wrap01(double t) {
  double r = t - std::floor(t);
  return r == 1.0 ? 0.0 : r;
}

double torus_dist(double a, double b) {
  double d = std::abs(wrap01(a) - wrap01(b));
  return std::min(d, 1.0 - d);
}

int matrix_rank(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  double tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
  return static_cast<int>((svd.singularValues().array() > tol).count());
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::InfeasibleFlagged: return "infeasible_flagged";
  }
  return "?";
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

int ProblemSpec::m() const {
  if (std::holds_alternative<PwLinearFamily>(family))
    return static_cast<int>(std::get<PwLinearFamily>(family).rho.size());
  return std::get<TrigFamily>(family).gamma.m;
}

void ProblemSpec::validate() const {
  if (fidelity.m() != m()) throw SpecError("fidelity data length differs from m");
  if (std::holds_alternative<PwLinearFamily>(family)) {
    const auto& fam = std::get<PwLinearFamily>(family);
    if (!fam.mesh) throw SpecError("piecewise-linear family without a mesh");
    if (fam.kernel_cols.cols() != op.kernel_dim())
      throw SpecError("kernel block width differs from dim(ker L)");
    if (fam.kernel_cols.cols() > 0 && fam.kernel_cols.rows() != m())
      throw SpecError("kernel block rows differ from m");
    if (op.dim() != fam.mesh->dim) throw SpecError("operator/mesh dimension mismatch");
  } else {
    const auto& fam = std::get<TrigFamily>(family);
    if (op.dim() != 1) throw SpecError("trig family requires a 1-D operator");
    if (fam.kernel.rows.rows() != op.kernel_dim())
      throw SpecError("kernel row count differs from dim(ker L)");
    if (fam.kernel.rows.rows() > 0 && fam.kernel.rows.cols() != m())
      throw SpecError("kernel row length differs from m");
  }
}

json SolveReport::to_json() const {
  return json{{"primal_objective", primal_objective},
              {"dual_objective", dual_objective},
              {"gap", gap},
              {"m", m},
              {"m_bar", m_bar},
              {"atoms_before", atoms_before},
              {"atoms_after_sparsify", atoms_after_sparsify},
              {"certificate_max_eta", certificate_max_eta},
              {"primal_residual", primal_residual},
              {"dual_residual", dual_residual},
              {"wall_time_s", wall_time_s},
              {"status", status}};
}

json CertificateCheck::to_json() const {
  return json{{"support_ok", support_ok},   {"bound_ok", bound_ok},
              {"gap_ok", gap_ok},           {"worst_atom_distance", worst_atom_distance},
              {"max_eta", max_eta},         {"gap", gap},
              {"passed", passed()}};
}

namespace {

AnalysisSolution solve_pwl_route(const ProblemSpec& spec) {
  const auto& fam = std::get<PwLinearFamily>(spec.family);
  const SimplicialMesh& mesh = *fam.mesh;
  const int m = spec.m();
  const int V = static_cast<int>(mesh.vertices.size());
  const int r = static_cast<int>(fam.kernel_cols.cols());

  // keep every vertex weight; thresholding happens after purification
  VertexPrimalResult primal = solve_vertex_primal(mesh, fam.rho, fam.kernel_cols,
                                                  spec.fidelity, spec.solver, 0.0);
  if (primal.info.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "vertex primal did not converge (status " << status_name(primal.info.status)
        << ", rp=" << primal.info.primal_residual
        << ", rd=" << primal.info.dual_residual << ")";
    throw SolveFailure(msg.str());
  }

  Eigen::VectorXd d_full(V);
  for (int j = 0; j < V; ++j) d_full(j) = primal.measure.atoms()[j].weight;

  if (spec.purify && spec.fidelity.kind() == Fidelity::Kind::EqualityTo) {
    Eigen::MatrixXd P(m, V);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < V; ++j) P(i, j) = fam.rho[i].vertex_values(j);
    Eigen::VectorXd b_eff = spec.fidelity.b();
    if (r > 0) b_eff -= fam.kernel_cols * primal.kernel_coeffs;
    d_full = purify_support(P, b_eff, d_full).u;
  }

  std::vector<Atom> kept;
  for (int j = 0; j < V; ++j)
    if (std::abs(d_full(j)) >= spec.amp_threshold)
      kept.emplace_back(mesh.vertices[j], d_full(j));
  DiscreteMeasure raw(mesh.dim, std::move(kept));

  DiscreteMeasure sparse =
      spec.sparsify ? sparsify_solution(raw, mesh, spec.amp_threshold) : raw;

  VertexDualResult dual =
      solve_vertex_dual(mesh, fam.rho, fam.kernel_cols, spec.fidelity, spec.solver);

  AnalysisSolution out;
  out.raw_measure = raw;
  out.sparse_measure = sparse;
  out.dual_q = dual.q;
  out.signal = reconstruct(spec.op, sparse, primal.kernel_coeffs);

  double max_eta = 0.0;
  for (int j = 0; j < V; ++j) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) v += dual.q(i) * fam.rho[i].vertex_values(j);
    max_eta = std::max(max_eta, std::abs(v));
  }

  out.report.primal_objective = primal.info.objective;
  out.report.dual_objective = dual.objective;
  out.report.gap = primal.info.objective - dual.objective;
  out.report.m = m;
  out.report.m_bar = m - matrix_rank(fam.kernel_cols);
  out.report.atoms_before = static_cast<int>(raw.size());
  out.report.atoms_after_sparsify = static_cast<int>(sparse.size());
  out.report.certificate_max_eta = max_eta;
  out.report.primal_residual = primal.info.primal_residual;
  out.report.dual_residual = primal.info.dual_residual;
  out.report.status = status_name(primal.info.status);
  return out;
}

AnalysisSolution solve_trig_route(const ProblemSpec& spec) {
  const auto& fam = std::get<TrigFamily>(spec.family);
  const int m = spec.m();

  TrigDualResult dual = solve_dual_sdp(fam.gamma, fam.kernel, spec.fidelity, spec.solver);
  if (dual.conic.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "dual SDP did not converge (status " << status_name(dual.conic.status)
        << ", rp=" << dual.conic.primal_residual << ", rd=" << dual.conic.dual_residual
        << ")";
    throw SolveFailure(msg.str());
  }

  // Signing convention: eta = sum_i (-q_i) rho_i equals sign(d_k) on the
  // support of the solution.
  TrigPoly eta = certificate_poly(-dual.q, fam.gamma);

  CertificateRoots roots;
  try {
    // Radius widened against radial splitting of tangent double roots under
    // solver noise; the |eta| >= 1 - tol filter enforces the semantics.
    roots = find_unit_modulus_roots(eta, 1e-3, 1e-6, 1e-5, true);
  } catch (const std::runtime_error& e) {
    throw SolveFailure(std::string("certificate root extraction failed: ") + e.what());
  }

  RefitResult refit =
      refit_primal(roots.positions, fam.gamma, fam.kernel, spec.fidelity, spec.solver);
  if (!roots.positions.empty() && refit.conic.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "primal refit did not converge (status " << status_name(refit.conic.status)
        << ", rp=" << refit.conic.primal_residual << ")";
    throw SolveFailure(msg.str());
  }

  AnalysisSolution out;
  out.raw_measure = refit.measure;
  out.sparse_measure = coalesce(refit.measure, 1e-9);
  out.dual_q = dual.q;
  out.roots = roots;
  out.signal = reconstruct(spec.op, out.sparse_measure, refit.kernel_coeffs);

  double max_eta = 0.0;
  for (int g = 0; g < 10000; ++g)
    max_eta = std::max(max_eta, std::abs(eta.eval_complex(g / 10000.0)));

  out.report.primal_objective = refit.objective;
  out.report.dual_objective = dual.objective;
  out.report.gap = refit.objective - dual.objective;
  out.report.m = m;
  out.report.m_bar = m - matrix_rank(fam.kernel.rows);
  out.report.atoms_before = static_cast<int>(out.raw_measure.size());
  out.report.atoms_after_sparsify = static_cast<int>(out.sparse_measure.size());
  out.report.certificate_max_eta = max_eta;
  out.report.primal_residual = dual.conic.primal_residual;
  out.report.dual_residual = dual.conic.dual_residual;
  out.report.status = status_name(dual.conic.status);
  return out;
}

}  // namespace

AnalysisSolution solve_analysis_problem(const ProblemSpec& spec) {
  spec.validate();
  double t0 = now_seconds();
  AnalysisSolution out = std::holds_alternative<PwLinearFamily>(spec.family)
                             ? solve_pwl_route(spec)
                             : solve_trig_route(spec);
  out.report.wall_time_s = now_seconds() - t0;
  return out;
}

CertificateCheck verify_certificate(const AnalysisSolution& sol,
                                    const ProblemSpec& spec, double tol) {
  CertificateCheck check;
  check.gap = sol.report.gap;
  check.gap_ok =
      std::abs(check.gap) <= tol * (1.0 + std::abs(sol.report.primal_objective));

  if (std::holds_alternative<TrigFamily>(spec.family)) {
    const auto& fam = std::get<TrigFamily>(spec.family);
    TrigPoly eta = certificate_poly(-sol.dual_q, fam.gamma);
    double mx = 0.0;
    for (int g = 0; g < 10000; ++g)
      mx = std::max(mx, std::abs(eta.eval_complex(g / 10000.0)));
    check.max_eta = mx;
    check.bound_ok = mx <= 1.0 + tol;
    double worst = 0.0;
    for (const Atom& a : sol.sparse_measure.atoms()) {
      double best = 1.0;
      for (double t : sol.roots.positions)
        best = std::min(best, torus_dist(a.position(0), t));
      worst = std::max(worst, best);
    }
    check.worst_atom_distance = worst;
    check.support_ok = worst <= tol;
  } else {
    const auto& fam = std::get<PwLinearFamily>(spec.family);
    const int m = spec.m();
    auto eta_at = [&](const Eigen::VectorXd& x) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += sol.dual_q(i) * eval_pwl(fam.rho[i], x);
      return v;
    };
    double mx = 0.0;
    for (const auto& v : fam.mesh->vertices) mx = std::max(mx, std::abs(eta_at(v)));
    check.max_eta = mx;
    check.bound_ok = mx <= 1.0 + tol;
    // a merged atom sits inside a cell where the certificate is identically
    // +-1, so |eta(atom)| itself measures membership in the unit set
    double worst = 0.0;
    for (const Atom& a : sol.sparse_measure.atoms())
      worst = std::max(worst, 1.0 - std::abs(eta_at(a.position)));
    check.worst_atom_distance = worst;
    check.support_ok = worst <= tol;
  }
  return check;
}

std::vector<RefinementRow> grid_refinement_study(const TrigFamily& family,
                                                 const Fidelity& fidelity,
                                                 const std::vector<double>& h_list,
                                                 const SolverSettings& settings) {
  std::vector<RefinementRow> table;
  if (h_list.empty()) return table;

  TrigDualResult ref = solve_dual_sdp(family.gamma, family.kernel, fidelity, settings);
  if (ref.conic.status != SolveStatus::Optimal)
    throw SolveFailure("grid refinement: reference trig dual did not converge");

  std::vector<TrigPoly> rho;
  for (int i = 0; i < family.gamma.m; ++i) rho.push_back(family.gamma.column(i));

  for (double h : h_list) {
    int cells = std::max(1, static_cast<int>(std::lround(1.0 / h)));
    auto mesh = std::make_shared<SimplicialMesh>(SimplicialMesh::uniform_1d(cells));
    std::vector<PwLinearFn> rho_h;
    rho_h.reserve(rho.size());
    for (const auto& r : rho)
      rho_h.push_back(linearize_on_mesh(
          mesh, [&r](const Eigen::VectorXd& x) { return r.eval(x(0)); }));
    Eigen::MatrixXd kernel_cols(family.gamma.m, family.kernel.rows.rows());
    for (int k = 0; k < kernel_cols.cols(); ++k)
      kernel_cols.col(k) = family.kernel.rows.row(k).transpose();
    VertexPrimalResult res =
        solve_vertex_primal(*mesh, rho_h, kernel_cols, fidelity, settings);
    table.push_back({h, res.info.objective, res.info.objective - ref.objective});
  }
  return table;
}

// ---------------------------------------------------------------------------
// plotting

namespace {
struct SvgCanvas {
  double width = 640, height = 360, margin = 42;
  double xmin = 0, xmax = 1, ymin = -1, ymax = 1;
  double px(double x) const {
    return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
  }
  double py(double y) const {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  }
};
}  // namespace

void write_stem_svg(const std::string& path, const std::vector<PlotSeries>& series) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");

  const int dim = series.empty() || series[0].measure.empty() ? 1 : series[0].measure.dim();
  SvgCanvas cv;
  double wmax = 1e-9;
  for (const auto& s : series)
    for (const Atom& a : s.measure.atoms()) wmax = std::max(wmax, std::abs(a.weight));
  cv.ymin = -1.1 * wmax;
  cv.ymax = 1.1 * wmax;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cv.width
     << "\" height=\"" << cv.height << "\" viewBox=\"0 0 " << cv.width << " "
     << cv.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (dim == 1) {
    os << "<line x1=\"" << cv.px(0) << "\" y1=\"" << cv.py(0) << "\" x2=\"" << cv.px(1)
       << "\" y2=\"" << cv.py(0) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int t = 0; t <= 10; ++t) {
      double x = t / 10.0;
      os << "<line x1=\"" << cv.px(x) << "\" y1=\"" << cv.py(0) - 3 << "\" x2=\""
         << cv.px(x) << "\" y2=\"" << cv.py(0) + 3 << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << cv.px(x) << "\" y=\"" << cv.height - 8
         << "\" font-size=\"10\" text-anchor=\"middle\">" << x << "</text>\n";
    }
    for (const auto& s : series) {
      for (const Atom& a : s.measure.atoms()) {
        double x = a.position(0);
        os << "<line x1=\"" << cv.px(x) << "\" y1=\"" << cv.py(0) << "\" x2=\"" << cv.px(x)
           << "\" y2=\"" << cv.py(a.weight) << "\" stroke=\"" << s.color
           << "\" stroke-width=\"1.5\"/>\n";
        os << "<circle cx=\"" << cv.px(x) << "\" cy=\"" << cv.py(a.weight)
           << "\" r=\"4\" fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"1.5\"/>\n";
      }
    }
  } else {
    cv.ymin = 0;
    cv.ymax = 1;  // unit square scatter
    for (const auto& s : series) {
      for (const Atom& a : s.measure.atoms()) {
        double r = 2.0 + 6.0 * std::sqrt(std::abs(a.weight) / wmax);
        os << "<circle cx=\"" << cv.px(a.position(0)) << "\" cy=\"" << cv.py(a.position(1))
           << "\" r=\"" << r << "\" fill=\"" << (a.weight >= 0 ? s.color : "none")
           << "\" stroke=\"" << s.color << "\" fill-opacity=\"0.5\"/>\n";
      }
    }
  }
  double ly = 16;
  for (const auto& s : series) {
    os << "<text x=\"" << cv.margin << "\" y=\"" << ly << "\" font-size=\"12\" fill=\""
       << s.color << "\">" << s.label << "</text>\n";
    ly += 14;
  }
  os << "</svg>\n";
}

double atom_match_error(const DiscreteMeasure& truth, const DiscreteMeasure& rec,
                        bool torus) {
  std::vector<Atom> a = truth.atoms(), b = rec.atoms();
  auto dist = [&](const Atom& p, const Atom& q) {
    if (torus && p.position.size() == 1)
      return torus_dist(p.position(0), q.position(0));
    return (p.position - q.position).norm();
  };
  double err = 0.0;
  while (!a.empty() && !b.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) {
        double d = dist(a[i], b[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    err += best + std::abs(a[bi].weight - b[bj].weight);
    a.erase(a.begin() + bi);
    b.erase(b.begin() + bj);
  }
  for (const Atom& x : a) err += std::abs(x.weight);
  for (const Atom& x : b) err += std::abs(x.weight);
  return err;
}

}  // namespace tvexact
