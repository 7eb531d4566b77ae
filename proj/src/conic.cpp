#include "tvexact/conic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvexact {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

void ConicProblem::validate() const {
  if (n_vars <= 0) throw std::invalid_argument("conic problem: no variables");
  if (cost.size() != n_vars) throw std::invalid_argument("conic problem: cost length");
  if (quad_diag.size() != 0 && quad_diag.size() != n_vars)
    throw std::invalid_argument("conic problem: quad_diag length");
  if (quad_diag.size() > 0 && quad_diag.minCoeff() < 0.0)
    throw std::invalid_argument("conic problem: quad_diag must be nonnegative");
  int rows = 0;
  for (const ConeSpec& c : cones) {
    if (c.dim <= 0) throw std::invalid_argument("conic problem: empty cone block");
    if (c.kind == ConeSpec::Kind::PsdReal && c.dim != c.psd_side * (c.psd_side + 1) / 2)
      throw std::invalid_argument("conic problem: PSD block length != s(s+1)/2");
    rows += c.dim;
  }
  if (rows != rhs.size() || rows == 0)
    throw std::invalid_argument("conic problem: cone dims must sum to row count");
  for (const auto& t : triplets)
    if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= n_vars)
      throw std::invalid_argument("conic problem: triplet out of range");
}

int svec_index(int i, int j, int side) {
  // column-major lower triangle: column j holds side - j entries
  return j * side - j * (j - 1) / 2 + (i - j);
}

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  Eigen::VectorXd v(n * (n + 1) / 2);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      v(k++) = (i == j) ? S(i, j) : kSqrt2 * 0.5 * (S(i, j) + S(j, i));
  return v;
}

Eigen::MatrixXd unsvec(const Eigen::Ref<const Eigen::VectorXd>& v, int side) {
  Eigen::MatrixXd S(side, side);
  int k = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      double val = v(k++);
      if (i == j) {
        S(i, j) = val;
      } else {
        S(i, j) = S(j, i) = val / kSqrt2;
      }
    }
  return S;
}

Eigen::MatrixXd hermitian_embed(const Eigen::MatrixXcd& H, double tol) {
  const int s = static_cast<int>(H.rows());
  if (H.cols() != s) throw std::invalid_argument("hermitian_embed: square input required");
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > tol * std::max(1.0, H.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("hermitian_embed: input is not Hermitian");
  Eigen::MatrixXd E(2 * s, 2 * s);
  Eigen::MatrixXd re = H.real(), im = H.imag();
  re = 0.5 * (re + re.transpose()).eval();
  im = 0.5 * (im - im.transpose()).eval();
  E.topLeftCorner(s, s) = re;
  E.bottomRightCorner(s, s) = re;
  E.topRightCorner(s, s) = -im;
  E.bottomLeftCorner(s, s) = im;
  return E;
}

Eigen::VectorXd project_cone(const ConeSpec& cone,
                             const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != cone.dim)
    throw std::invalid_argument("project_cone: vector length does not match cone");
  switch (cone.kind) {
    case ConeSpec::Kind::Zero:
      return Eigen::VectorXd::Zero(cone.dim);
    case ConeSpec::Kind::NonNeg:
      return v.cwiseMax(0.0);
    case ConeSpec::Kind::Box:
      return v.cwiseMax(cone.lo).cwiseMin(cone.hi);
    case ConeSpec::Kind::SecondOrder: {
      if (cone.dim == 1) return v.cwiseMax(0.0);
      const double t = v(0);
      const double nx = v.tail(cone.dim - 1).norm();
      if (nx <= t) return v;
      if (nx <= -t) return Eigen::VectorXd::Zero(cone.dim);
      Eigen::VectorXd out(cone.dim);
      const double a = 0.5 * (1.0 + t / nx);
      out(0) = a * nx;
      out.tail(cone.dim - 1) = a * v.tail(cone.dim - 1);
      return out;
    }
    case ConeSpec::Kind::PsdReal: {
      Eigen::MatrixXd S = unsvec(v, cone.psd_side);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
      Eigen::MatrixXd P =
          es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
      return svec(P);
    }
  }
  throw std::logic_error("project_cone: unknown cone kind");
}

namespace {

// b - Ax in K, blockwise projection of (b - w) and support function of the
// box blocks for the corrected duality gap.
void project_onto_K(const std::vector<ConeSpec>& cones, Eigen::VectorXd& v) {
  int at = 0;
  for (const ConeSpec& c : cones) {
    v.segment(at, c.dim) = project_cone(c, v.segment(at, c.dim));
    at += c.dim;
  }
}

double box_support_correction(const std::vector<ConeSpec>& cones,
                              const Eigen::VectorXd& y) {
  double corr = 0.0;
  int at = 0;
  for (const ConeSpec& c : cones) {
    if (c.kind == ConeSpec::Kind::Box) {
      for (int i = 0; i < c.dim; ++i) {
        double yi = -y(at + i);
        corr += std::max(yi * c.lo, yi * c.hi);
      }
    }
    at += c.dim;
  }
  return corr;
}

bool lp_cones_only(const std::vector<ConeSpec>& cones) {
  for (const ConeSpec& c : cones)
    if (c.kind == ConeSpec::Kind::SecondOrder || c.kind == ConeSpec::Kind::PsdReal)
      return false;
  return true;
}

// Modified Ruiz equilibration. Rows of SOC/PSD/Box blocks share one scalar so
// the scaled slacks stay in (a scaled copy of) the cone; Zero/NonNeg rows
// scale individually.
struct Scaling {
  Eigen::VectorXd col;   // D
  Eigen::VectorXd row;   // E
  double cost = 1.0;     // c_scale
  double rhs = 1.0;      // b_scale
};

Scaling ruiz_equilibrate(Eigen::SparseMatrix<double>& A, Eigen::VectorXd& b,
                         Eigen::VectorXd& c, std::vector<ConeSpec>& cones) {
  const int n = static_cast<int>(A.cols());
  const int rows = static_cast<int>(A.rows());
  Scaling sc;
  sc.col = Eigen::VectorXd::Ones(n);
  sc.row = Eigen::VectorXd::Ones(rows);

  // block id per row: -1 -> scale row individually
  std::vector<int> block_of(rows, -1);
  std::vector<std::pair<int, int>> blocks;  // (start, dim) of uniform blocks
  {
    int at = 0, id = 0;
    for (const ConeSpec& cn : cones) {
      if (cn.kind == ConeSpec::Kind::SecondOrder || cn.kind == ConeSpec::Kind::PsdReal ||
          cn.kind == ConeSpec::Kind::Box) {
        for (int i = 0; i < cn.dim; ++i) block_of[at + i] = id;
        blocks.emplace_back(at, cn.dim);
        ++id;
      }
      at += cn.dim;
    }
  }

  Eigen::VectorXd dr(rows), dc(n);
  for (int sweep = 0; sweep < 15; ++sweep) {
    dr.setZero();
    dc.setZero();
    for (int k = 0; k < A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
        double a = std::abs(it.value());
        dr(it.row()) = std::max(dr(it.row()), a);
        dc(it.col()) = std::max(dc(it.col()), a);
      }
    // uniform scalar per block: the max over the block's rows
    for (auto [at, dim] : blocks) {
      double mx = dr.segment(at, dim).maxCoeff();
      dr.segment(at, dim).setConstant(mx);
    }
    for (int i = 0; i < rows; ++i) dr(i) = dr(i) > 1e-12 ? 1.0 / std::sqrt(dr(i)) : 1.0;
    for (int j = 0; j < n; ++j) dc(j) = dc(j) > 1e-12 ? 1.0 / std::sqrt(dc(j)) : 1.0;

    A = dr.asDiagonal() * A * dc.asDiagonal();
    sc.row = sc.row.cwiseProduct(dr);
    sc.col = sc.col.cwiseProduct(dc);

    // cost scaling toward unit infinity norm
    double cmax = (sc.col.cwiseProduct(c)).lpNorm<Eigen::Infinity>() * sc.cost;
    if (cmax > 1e-12) {
      double g = 1.0 / std::max(cmax, 1e-6);
      if (g < 1.0) sc.cost *= std::sqrt(g) > 1e-3 ? std::sqrt(g) : 1e-3;
    }
  }

  b = sc.row.cwiseProduct(b);
  c = sc.cost * sc.col.cwiseProduct(c);
  double bnorm = b.lpNorm<Eigen::Infinity>();
  if (bnorm > 1.0) sc.rhs = 1.0 / bnorm;
  b *= sc.rhs;
  // Box bounds live in slack space: s_hat = b_scale * E s
  {
    int at = 0;
    for (ConeSpec& cn : cones) {
      if (cn.kind == ConeSpec::Kind::Box) {
        double e = sc.row(at) * sc.rhs;
        cn.lo *= e;
        cn.hi *= e;
      }
      at += cn.dim;
    }
  }
  return sc;
}

struct PolishOutcome {
  bool accepted = false;
  Eigen::VectorXd x, y;
  double rp = 0.0, rd = 0.0;
};

// Active-set refinement for problems with Zero/NonNeg/Box rows only: solve
// the equality-constrained KKT system on the active rows with tiny
// regularization and iterative refinement, and accept the candidate when it
// tightens both residuals. quad is the diagonal quadratic term (may be empty).
PolishOutcome polish_lp(const Eigen::SparseMatrix<double>& A,
                        const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                        const Eigen::VectorXd& quad,
                        const std::vector<ConeSpec>& cones, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& y0, double rp0, double rd0) {
  const int n = static_cast<int>(A.cols());
  const int rows = static_cast<int>(A.rows());
  PolishOutcome out;

  Eigen::VectorXd s = b - A * x0;
  std::vector<int> act;
  std::vector<double> act_rhs;
  {
    int at = 0;
    for (const ConeSpec& cn : cones) {
      for (int i = 0; i < cn.dim; ++i) {
        int r = at + i;
        switch (cn.kind) {
          case ConeSpec::Kind::Zero:
            act.push_back(r);
            act_rhs.push_back(b(r));
            break;
          case ConeSpec::Kind::NonNeg:
            if (y0(r) > std::max(1e-12, std::abs(s(r)))) {
              act.push_back(r);
              act_rhs.push_back(b(r));
            }
            break;
          case ConeSpec::Kind::Box:
            if (y0(r) > std::max(1e-12, std::abs(s(r) - cn.lo))) {
              act.push_back(r);
              act_rhs.push_back(b(r) - cn.lo);
            } else if (-y0(r) > std::max(1e-12, std::abs(s(r) - cn.hi))) {
              act.push_back(r);
              act_rhs.push_back(b(r) - cn.hi);
            }
            break;
          default:
            return out;
        }
      }
      at += cn.dim;
    }
  }
  const int na = static_cast<int>(act.size());
  if (na == 0) return out;

  const double delta = 1e-9;
  std::vector<Eigen::Triplet<double>> kt;
  for (int i = 0; i < n; ++i)
    kt.emplace_back(i, i, delta + (quad.size() > 0 ? quad(i) : 0.0));
  for (int i = 0; i < na; ++i) kt.emplace_back(n + i, n + i, -delta);
  // gather active rows of A
  std::vector<std::vector<std::pair<int, double>>> arow(rows);
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      arow[it.row()].push_back({static_cast<int>(it.col()), it.value()});
  for (int i = 0; i < na; ++i)
    for (auto& [j, v] : arow[act[i]]) {
      kt.emplace_back(n + i, j, v);
      kt.emplace_back(j, n + i, v);
    }
  Eigen::SparseMatrix<double> kkt(n + na, n + na);
  kkt.setFromTriplets(kt.begin(), kt.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return out;

  Eigen::VectorXd rhs(n + na);
  rhs.head(n) = -c;
  for (int i = 0; i < na; ++i) rhs(n + i) = act_rhs[i];
  Eigen::VectorXd t = ldlt.solve(rhs);
  for (int refine = 0; refine < 3; ++refine) {
    Eigen::VectorXd resid = rhs;
    // unregularized KKT residual
    Eigen::VectorXd xx = t.head(n), yy = t.tail(na);
    if (quad.size() > 0) resid.head(n) -= quad.cwiseProduct(xx);
    for (int i = 0; i < na; ++i)
      for (auto& [j, v] : arow[act[i]]) {
        resid(j) -= v * yy(i);
        resid(n + i) -= v * xx(j);
      }
    t += ldlt.solve(resid);
  }

  Eigen::VectorXd x = t.head(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  for (int i = 0; i < na; ++i) y(act[i]) = t(n + i);

  // check feasibility of the inactive slacks and the dual signs
  Eigen::VectorXd snew = b - A * x;
  double viol = 0.0;
  {
    int at = 0;
    for (const ConeSpec& cn : cones) {
      for (int i = 0; i < cn.dim; ++i) {
        int r = at + i;
        if (cn.kind == ConeSpec::Kind::NonNeg) {
          viol = std::max(viol, -snew(r));
          viol = std::max(viol, -y(r));
        } else if (cn.kind == ConeSpec::Kind::Box) {
          viol = std::max(viol, snew(r) - cn.hi);
          viol = std::max(viol, cn.lo - snew(r));
        }
      }
      at += cn.dim;
    }
  }
  double rp = 0.0;
  {
    int at = 0;
    for (const ConeSpec& cn : cones) {
      for (int i = 0; i < cn.dim; ++i) {
        int r = at + i;
        double want = snew(r);
        double proj = want;
        if (cn.kind == ConeSpec::Kind::Zero) proj = 0.0;
        if (cn.kind == ConeSpec::Kind::NonNeg) proj = std::max(0.0, want);
        if (cn.kind == ConeSpec::Kind::Box) proj = std::clamp(want, cn.lo, cn.hi);
        rp = std::max(rp, std::abs(want - proj));
      }
      at += cn.dim;
    }
  }
  Eigen::VectorXd grad = c + A.transpose() * y;
  if (quad.size() > 0) grad += quad.cwiseProduct(x);
  double rd = grad.lpNorm<Eigen::Infinity>();
  if (std::max(rp, viol) <= std::max(rp0, 1e-12) && rd <= std::max(rd0, 1e-12)) {
    out.accepted = true;
    out.x = x;
    out.y = y;
    out.rp = std::max(rp, viol);
    out.rd = rd;
  }
  return out;
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const SolverSettings& settings) {
  p.validate();
  const int n = p.n_vars;
  const int rows = p.n_rows();

  Eigen::SparseMatrix<double> A0(rows, n);
  A0.setFromTriplets(p.triplets.begin(), p.triplets.end());

  // scaled copies
  Eigen::SparseMatrix<double> A = A0;
  Eigen::VectorXd b = p.rhs;
  Eigen::VectorXd c = p.cost;
  std::vector<ConeSpec> cones = p.cones;
  Scaling sc = ruiz_equilibrate(A, b, c, cones);
  Eigen::SparseMatrix<double> At = A.transpose();
  Eigen::SparseMatrix<double> A0t = A0.transpose();
  const Eigen::VectorXd quad_u =
      p.has_quad() ? p.quad_diag : Eigen::VectorXd::Zero(n);
  // objective scale is cost_scale * rhs_scale; variables scale by D / rhs_scale
  Eigen::VectorXd quad_s =
      (sc.cost / sc.rhs) * sc.col.array().square().matrix().cwiseProduct(quad_u);

  // Stiffer penalty on equality rows, as is standard for splitting methods.
  std::vector<double> rho_scale(rows, 1.0);
  {
    int at = 0;
    for (const ConeSpec& cn : cones) {
      if (cn.kind == ConeSpec::Kind::Zero)
        for (int i = 0; i < cn.dim; ++i) rho_scale[at + i] = 1e3;
      at += cn.dim;
    }
  }

  double rho = settings.rho;
  const double sigma = settings.sigma;
  const double alpha = settings.relaxation;

  Eigen::SparseMatrix<double> kkt(n + rows, n + rows);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  auto factorize = [&]() {
    std::vector<Eigen::Triplet<double>> kt;
    kt.reserve(p.triplets.size() * 2 + n + rows);
    for (int i = 0; i < n; ++i) kt.emplace_back(i, i, sigma + quad_s(i));
    for (int k = 0; k < A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
        kt.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
        kt.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                        it.value());
      }
    for (int i = 0; i < rows; ++i)
      kt.emplace_back(n + i, n + i, -1.0 / (rho * rho_scale[i]));
    kkt.setFromTriplets(kt.begin(), kt.end());
    if (!analyzed) {
      ldlt.analyzePattern(kkt);
      analyzed = true;
    }
    ldlt.factorize(kkt);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("conic solve: KKT factorization failed");
  };
  factorize();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd rho_vec(rows), rho_inv(rows);
  auto refresh_rho_vec = [&]() {
    for (int i = 0; i < rows; ++i) {
      rho_vec(i) = rho * rho_scale[i];
      rho_inv(i) = 1.0 / rho_vec(i);
    }
  };
  refresh_rho_vec();

  Eigen::VectorXd rhs(n + rows), sol(n + rows), xt(n), zt(rows), w(rows);

  // unscaled iterates for termination checks
  Eigen::VectorXd row_inv = sc.row.cwiseInverse();
  Eigen::VectorXd col_inv = sc.col.cwiseInverse();

  ConicSolution out;
  out.status = SolveStatus::MaxIter;
  double rp_u = 0.0, rd_u = 0.0;
  int next_adapt = 100;
  const bool polishable = settings.polish && lp_cones_only(p.cones);
  int next_polish = 0, polish_backoff = 500;
  bool polished_early = false;

  int iter = 0;
  for (iter = 1; iter <= settings.max_iter; ++iter) {
    rhs.head(n) = sigma * x - c;
    rhs.tail(rows) = z - rho_inv.cwiseProduct(y);
    sol = ldlt.solve(rhs);
    xt = sol.head(n);
    zt = z + rho_inv.cwiseProduct(sol.tail(rows) - y);

    x = alpha * xt + (1.0 - alpha) * x;
    w = alpha * zt + (1.0 - alpha) * z + rho_inv.cwiseProduct(y);
    // z = Pi_C(w) with C = { z : b - z in K }
    Eigen::VectorXd bw = b - w;
    project_onto_K(cones, bw);
    Eigen::VectorXd z_new = b - bw;
    y += rho_vec.cwiseProduct(w - rho_inv.cwiseProduct(y) - z_new);
    z = z_new;

    if (iter % settings.check_interval == 0 || iter == settings.max_iter) {
      // unscaled residuals: x_u = D x / b_scale, y_u = E y / c_scale
      Eigen::VectorXd ax_u = row_inv.cwiseProduct(A * x) / sc.rhs;
      Eigen::VectorXd z_u = row_inv.cwiseProduct(z) / sc.rhs;
      Eigen::VectorXd aty_u = col_inv.cwiseProduct(At * y) / sc.cost;
      Eigen::VectorXd px_u =
          quad_u.cwiseProduct(sc.col.cwiseProduct(x)) / sc.rhs;
      rp_u = (ax_u - z_u).lpNorm<Eigen::Infinity>();
      rd_u = (p.cost + px_u + aty_u).lpNorm<Eigen::Infinity>();
      double sp = std::max(ax_u.lpNorm<Eigen::Infinity>(), z_u.lpNorm<Eigen::Infinity>());
      double sd = std::max({p.cost.lpNorm<Eigen::Infinity>(),
                            aty_u.lpNorm<Eigen::Infinity>(),
                            px_u.lpNorm<Eigen::Infinity>(), 1e-30});
      double eps_p = settings.eps_abs + settings.eps_rel * sp;
      double eps_d = settings.eps_abs + settings.eps_rel * sd;
      if (settings.verbose && iter % (settings.check_interval * 40) == 0)
        std::fprintf(stderr, "iter %6d  rp %.3e  rd %.3e  rho %.2e\n", iter, rp_u, rd_u,
                      rho);
      if (rp_u <= eps_p && rd_u <= eps_d) {
        out.status = SolveStatus::Optimal;
        break;
      }
      // early active-set refinement once the iterate is roughly converged
      if (polishable && iter >= next_polish && rp_u <= 1e-4 * (1.0 + sp) &&
          rd_u <= 1e-4 * (1.0 + sd)) {
        Eigen::VectorXd x_u = sc.col.cwiseProduct(x) / sc.rhs;
        Eigen::VectorXd y_u = sc.row.cwiseProduct(y) / sc.cost;
        PolishOutcome po =
            polish_lp(A0, p.rhs, p.cost, quad_u, p.cones, x_u, y_u, rp_u, rd_u);
        if (po.accepted && po.rp <= eps_p && po.rd <= eps_d) {
          out.x = po.x;
          out.y = po.y;
          rp_u = po.rp;
          rd_u = po.rd;
          out.status = SolveStatus::Optimal;
          polished_early = true;
          break;
        }
        next_polish = iter + polish_backoff;
        polish_backoff = std::min(polish_backoff * 4, 20000);
      }
      if (settings.adaptive_rho && iter >= next_adapt) {
        // balance the same normalized residuals that drive termination
        double rp_n = rp_u / std::max(sp, 1e-12);
        double rd_n = rd_u / std::max(sd, 1e-12);
        double new_rho = rho;
        if (rp_n > 10.0 * rd_n)
          new_rho = std::min(rho * 2.0, 1e6);
        else if (rd_n > 10.0 * rp_n)
          new_rho = std::max(rho * 0.5, 1e-6);
        next_adapt = iter + 100;
        if (new_rho != rho) {
          rho = new_rho;
          refresh_rho_vec();
          factorize();
        }
      }
    }
  }

  // unscale
  if (!polished_early) {
    out.x = sc.col.cwiseProduct(x) / sc.rhs;
    out.y = sc.row.cwiseProduct(y) / sc.cost;
  }
  out.iterations = std::min(iter, settings.max_iter);
  out.primal_residual = rp_u;
  out.dual_residual = rd_u;

  if (!polished_early && polishable) {
    PolishOutcome po =
        polish_lp(A0, p.rhs, p.cost, quad_u, p.cones, out.x, out.y, rp_u, rd_u);
    if (po.accepted) {
      out.x = po.x;
      out.y = po.y;
      out.primal_residual = po.rp;
      out.dual_residual = po.rd;
      double sp = std::max((A0 * out.x).lpNorm<Eigen::Infinity>(),
                           (p.rhs - A0 * out.x).lpNorm<Eigen::Infinity>());
      double sd = std::max({p.cost.lpNorm<Eigen::Infinity>(),
                            (A0t * out.y).lpNorm<Eigen::Infinity>(), 1e-30});
      if (po.rp <= settings.eps_abs + settings.eps_rel * sp &&
          po.rd <= settings.eps_abs + settings.eps_rel * sd)
        out.status = SolveStatus::Optimal;
    }
  }

  // slack from the (possibly polished) primal point, projected exactly into K
  Eigen::VectorXd s_raw = p.rhs - A0 * out.x;
  Eigen::VectorXd s_proj = s_raw;
  project_onto_K(p.cones, s_proj);
  out.s = s_proj;
  double quad_term = 0.5 * quad_u.dot(out.x.cwiseProduct(out.x));
  out.objective = p.cost.dot(out.x) + quad_term;
  out.gap = out.objective + quad_term + p.rhs.dot(out.y) +
            box_support_correction(p.cones, out.y);
  if (out.status != SolveStatus::Optimal) {
    // crude divergence flag; all pipeline problems are feasible by design
    if (!std::isfinite(out.gap) || out.y.lpNorm<Eigen::Infinity>() > 1e12)
      out.status = SolveStatus::InfeasibleFlagged;
  }
  return out;
}

// ---------------------------------------------------------------------------
// text round-trip

namespace {
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
const char* cone_name(ConeSpec::Kind k) {
  switch (k) {
    case ConeSpec::Kind::Zero: return "ZERO";
    case ConeSpec::Kind::NonNeg: return "NONNEG";
    case ConeSpec::Kind::Box: return "BOX";
    case ConeSpec::Kind::SecondOrder: return "SOC";
    case ConeSpec::Kind::PsdReal: return "PSD";
  }
  return "?";
}
}  // namespace

void write_problem(std::ostream& os, const ConicProblem& p) {
  os << p.n_vars << " " << p.n_rows() << " " << p.cones.size() << "\n";
  for (int i = 0; i < p.n_vars; ++i)
    os << fmt17(p.cost(i)) << (i + 1 == p.n_vars ? "\n" : " ");
  if (p.has_quad()) {
    os << "QUAD\n";
    for (int i = 0; i < p.n_vars; ++i)
      os << fmt17(p.quad_diag(i)) << (i + 1 == p.n_vars ? "\n" : " ");
  }
  os << p.triplets.size() << "\n";
  for (const auto& t : p.triplets)
    os << t.row() << " " << t.col() << " " << fmt17(t.value()) << "\n";
  for (int i = 0; i < p.n_rows(); ++i)
    os << fmt17(p.rhs(i)) << (i + 1 == p.n_rows() ? "\n" : " ");
  for (const ConeSpec& c : p.cones) {
    os << cone_name(c.kind) << " ";
    if (c.kind == ConeSpec::Kind::PsdReal)
      os << c.psd_side;
    else
      os << c.dim;
    if (c.kind == ConeSpec::Kind::Box) os << " " << fmt17(c.lo) << " " << fmt17(c.hi);
    os << "\n";
  }
}

void write_problem(const std::string& path, const ConicProblem& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_problem(os, p);
}

ConicProblem read_problem(std::istream& is) {
  ConicProblem p;
  int n_cones = 0, n_rows = 0, n_trip = 0;
  if (!(is >> p.n_vars >> n_rows >> n_cones))
    throw std::runtime_error("conic read: bad header");
  p.cost.resize(p.n_vars);
  for (int i = 0; i < p.n_vars; ++i) is >> p.cost(i);
  {
    std::string tok;
    is >> tok;
    if (tok == "QUAD") {
      p.quad_diag.resize(p.n_vars);
      for (int i = 0; i < p.n_vars; ++i) is >> p.quad_diag(i);
      is >> n_trip;
    } else {
      n_trip = std::stoi(tok);
    }
  }
  p.triplets.reserve(n_trip);
  for (int k = 0; k < n_trip; ++k) {
    int r, c;
    double v;
    is >> r >> c >> v;
    p.triplets.emplace_back(r, c, v);
  }
  p.rhs.resize(n_rows);
  for (int i = 0; i < n_rows; ++i) is >> p.rhs(i);
  for (int k = 0; k < n_cones; ++k) {
    std::string kind;
    int d;
    is >> kind >> d;
    if (kind == "ZERO") p.cones.push_back(ConeSpec::zero(d));
    else if (kind == "NONNEG") p.cones.push_back(ConeSpec::nonneg(d));
    else if (kind == "SOC") p.cones.push_back(ConeSpec::second_order(d));
    else if (kind == "PSD") p.cones.push_back(ConeSpec::psd_real(d));
    else if (kind == "BOX") {
      double lo, hi;
      is >> lo >> hi;
      p.cones.push_back(ConeSpec::box(d, lo, hi));
    } else {
      throw std::runtime_error("conic read: unknown cone " + kind);
    }
  }
  if (!is) throw std::runtime_error("conic read: truncated input");
  p.validate();
  return p;
}

ConicProblem read_problem(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_problem(is);
}

// ---------------------------------------------------------------------------
// builder

int ProblemBuilder::add_vars(int k, double cost_each) {
  int at = n_vars_;
  n_vars_ += k;
  cost_.resize(n_vars_, 0.0);
  if (!quad_.empty()) quad_.resize(n_vars_, 0.0);
  for (int i = at; i < n_vars_; ++i) cost_[i] = cost_each;
  return at;
}

void ProblemBuilder::add_cost(int var, double w) { cost_.at(var) += w; }

void ProblemBuilder::add_quad(int var, double pcoef) {
  quad_.resize(n_vars_, 0.0);
  quad_.at(var) += pcoef;
}

int ProblemBuilder::begin_block(ConeSpec cone) {
  int at = n_rows_;
  n_rows_ += cone.dim;
  rhs_.resize(n_rows_, 0.0);
  cones_.push_back(cone);
  return at;
}

void ProblemBuilder::set_entry(int row, int var, double value) {
  if (row < 0 || row >= n_rows_ || var < 0 || var >= n_vars_)
    throw std::out_of_range("ProblemBuilder::set_entry");
  if (value != 0.0) triplets_.emplace_back(row, var, value);
}

void ProblemBuilder::set_rhs(int row, double value) { rhs_.at(row) = value; }

ConicProblem ProblemBuilder::build() const {
  ConicProblem p;
  p.n_vars = n_vars_;
  p.cost = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n_vars_);
  if (!quad_.empty()) {
    std::vector<double> q = quad_;
    q.resize(n_vars_, 0.0);
    p.quad_diag = Eigen::Map<const Eigen::VectorXd>(q.data(), n_vars_);
  }
  p.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), n_rows_);
  p.triplets = triplets_;
  p.cones = cones_;
  p.validate();
  return p;
}

}  // namespace tvexact
