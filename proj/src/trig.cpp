#include "tvexact/trig.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "encodings.hpp"

namespace tvexact {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
using cd = std::complex<double>;

double wrap01(double t) {
  double r = t - std::floor(t);
  return r == 1.0 ? 0.0 : r;
}

double torus_dist(double a, double b) {
  double d = std::abs(wrap01(a) - wrap01(b));
  return std::min(d, 1.0 - d);
}
}  // namespace

TrigPoly::TrigPoly(int K, Eigen::VectorXcd coeffs) : K_(K), coeffs_(std::move(coeffs)) {
  if (K_ < 0 || coeffs_.size() != 2 * K_ + 1)
    throw std::invalid_argument("TrigPoly: coefficient vector must have length 2K+1");
  double scale = std::max(1.0, coeffs_.cwiseAbs().maxCoeff());
  for (int j = 0; j <= K_; ++j) {
    cd a = coeffs_(K_ + j), b = coeffs_(K_ - j);
    if (std::abs(a - std::conj(b)) > 1e-12 * scale)
      throw std::invalid_argument("TrigPoly: coefficients are not Hermitian-symmetric");
  }
  for (int j = 1; j <= K_; ++j) {  // symmetrize exactly
    cd a = 0.5 * (coeffs_(K_ + j) + std::conj(coeffs_(K_ - j)));
    coeffs_(K_ + j) = a;
    coeffs_(K_ - j) = std::conj(a);
  }
  coeffs_(K_) = cd(coeffs_(K_).real(), 0.0);
}

std::complex<double> TrigPoly::eval_complex(double t) const {
  cd s(0.0, 0.0);
  for (int j = -K_; j <= K_; ++j)
    s += coeffs_(j + K_) * std::polar(1.0, -kTwoPi * j * t);
  return s;
}

std::complex<double> TrigPoly::eval_deriv(double t, int order) const {
  cd s(0.0, 0.0);
  for (int j = -K_; j <= K_; ++j) {
    cd f = std::pow(cd(0.0, -kTwoPi * j), order);
    s += f * coeffs_(j + K_) * std::polar(1.0, -kTwoPi * j * t);
  }
  return s;
}

double TrigPoly::eval(double t) const {
  cd v = eval_complex(t);
  double scale = std::max(1.0, std::abs(v));
  if (std::abs(v.imag()) > 1e-8 * scale)
    throw std::runtime_error("TrigPoly::eval: imaginary residual exceeds 1e-8");
  return v.real();
}

double TrigPoly::deriv1(double t) const {
  // d/dt |eta|^2 = 2 Re(eta' conj(eta))
  return 2.0 * std::real(eval_deriv(t, 1) * std::conj(eval_complex(t)));
}

double eval_trig(const TrigPoly& p, double t) { return p.eval(t); }

GammaMatrix::GammaMatrix(int K_, Eigen::MatrixXcd e) : K(K_), entries(std::move(e)) {
  if (entries.rows() != 2 * K + 1)
    throw std::invalid_argument("GammaMatrix: need 2K+1 rows");
  m = static_cast<int>(entries.cols());
  for (int i = 0; i < m; ++i) (void)column(i);  // validates Hermitian symmetry
}

TrigPoly GammaMatrix::column(int i) const { return TrigPoly(K, entries.col(i)); }

void GammaMatrix::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[96];
  for (int j = 0; j < entries.rows(); ++j) {
    for (int i = 0; i < m; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", entries(j, i).real(),
                    entries(j, i).imag());
      os << buf << (i + 1 == m ? "\n" : ",");
    }
  }
}

GammaMatrix GammaMatrix::load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<cd>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() % 2 != 0) throw std::runtime_error("gamma csv: odd entry count");
    std::vector<cd> row;
    for (std::size_t k = 0; k < vals.size(); k += 2) row.emplace_back(vals[k], vals[k + 1]);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.size() % 2 == 0)
    throw std::runtime_error("gamma csv: need an odd number of rows (j = -K..K)");
  int K = (static_cast<int>(rows.size()) - 1) / 2;
  int m = static_cast<int>(rows[0].size());
  Eigen::MatrixXcd e(2 * K + 1, m);
  for (int j = 0; j < e.rows(); ++j) {
    if (static_cast<int>(rows[j].size()) != m)
      throw std::runtime_error("gamma csv: ragged rows");
    for (int i = 0; i < m; ++i) e(j, i) = rows[j][i];
  }
  return GammaMatrix(K, std::move(e));
}

GammaMatrix fourier_gamma(int K) {
  const int m = 2 * K + 1;
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(2 * K + 1, m);
  e(K, 0) = 1.0;  // constant
  for (int j = 1; j <= K; ++j) {
    e(K + j, 2 * j - 1) = 0.5;  // cos(2 pi j t)
    e(K - j, 2 * j - 1) = 0.5;
    e(K + j, 2 * j) = cd(0.0, 0.5);  // sin(2 pi j t)
    e(K - j, 2 * j) = cd(0.0, -0.5);
  }
  return GammaMatrix(K, std::move(e));
}

GammaMatrix random_decay_gamma(int K, int m, Rng& rng) {
  Eigen::MatrixXcd e(2 * K + 1, m);
  for (int i = 0; i < m; ++i) {
    e(K, i) = rng.gaussian();
    for (int j = 1; j <= K; ++j) {
      cd g(rng.gaussian(), rng.gaussian());
      e(K + j, i) = g / static_cast<double>(j);
      e(K - j, i) = std::conj(e(K + j, i));
    }
  }
  return GammaMatrix(K, std::move(e));
}

TrigPoly certificate_poly(const Eigen::VectorXd& q, const GammaMatrix& gamma) {
  if (q.size() != gamma.m)
    throw std::invalid_argument("certificate_poly: q length != m");
  return TrigPoly(gamma.K, gamma.entries * q);
}

// ---------------------------------------------------------------------------
// dual SDP

namespace {

// Variable layout helpers for the Hermitian block Q (side n1 = 2K+1),
// parameterized by the real lower triangle and the strict imaginary lower
// triangle.
struct QLayout {
  int n1 = 0;
  int re0 = 0;  // first re variable
  int im0 = 0;  // first im variable
  int re(int a, int b) const { return re0 + svec_index(a, b, n1); }
  int im(int a, int b) const {  // a > b: strict lower triangle, column-major
    return im0 + svec_index(a, b, n1) - (b + 1);
  }
  int re_count() const { return n1 * (n1 + 1) / 2; }
  int im_count() const { return n1 * (n1 - 1) / 2; }
};

// Accumulates -svec(E(H_var)) into the PSD rows for a Hermitian elementary
// contribution val * e_a e_b^* + conj(val) * e_b e_a^* (a != b) or a real
// diagonal entry (a == b).
void add_psd_coeff(ProblemBuilder& B, int row0, int side_c, int var, int a, int b,
                   cd val, double sign) {
  const double sq2 = std::sqrt(2.0);
  const int s = side_c;  // complex side; embedded side is 2s
  auto add = [&](int i, int j, double v) {
    if (i < j) std::swap(i, j);
    double factor = (i == j) ? 1.0 : sq2;
    B.set_entry(row0 + svec_index(i, j, 2 * s), var, sign * factor * v);
  };
  if (a == b) {
    add(a, a, val.real());
    add(a + s, a + s, val.real());
    return;
  }
  int hi = std::max(a, b), lo = std::min(a, b);
  cd v_lohi = (a < b) ? val : std::conj(val);  // S(lo, hi)
  // Re block (twice) and Im block; only lower-triangle entries are written.
  add(hi, lo, v_lohi.real());
  add(hi + s, lo + s, v_lohi.real());
  // E(lo+s, hi) = Im S(lo,hi); E(hi+s, lo) = Im S(hi,lo) = -Im S(lo,hi)
  add(lo + s, hi, v_lohi.imag());
  add(hi + s, lo, -v_lohi.imag());
}

}  // namespace

TrigDualProgram assemble_dual_sdp(const GammaMatrix& gamma,
                                  const TrigKernelData& kernel, const Fidelity& f) {
  const int m = gamma.m;
  const int K = gamma.K;
  const int n1 = 2 * K + 1;
  const int sc = n1 + 1;  // complex side of the certificate block
  if (f.m() != m) throw std::invalid_argument("assemble_dual_sdp: fidelity length != m");
  if (kernel.rows.rows() > 0 && kernel.rows.cols() != m)
    throw std::invalid_argument("assemble_dual_sdp: kernel rows length != m");

  ProblemBuilder B;
  const int q0 = B.add_vars(m, 0.0);
  QLayout L;
  L.n1 = n1;
  L.re0 = B.add_vars(n1 * (n1 + 1) / 2, 0.0);
  L.im0 = B.add_vars(n1 * (n1 - 1) / 2, 0.0);

  // PSD block [[Q, Gamma q], [(Gamma q)*, 1]], real-embedded to side 2 sc.
  int psd = B.begin_block(ConeSpec::psd_real(2 * sc));
  // constant: bottom-right 1 in both embedded copies
  B.set_rhs(psd + svec_index(sc - 1, sc - 1, 2 * sc), 1.0);
  B.set_rhs(psd + svec_index(2 * sc - 1, 2 * sc - 1, 2 * sc), 1.0);
  // Q entries
  for (int a = 0; a < n1; ++a)
    add_psd_coeff(B, psd, sc, L.re(a, a), a, a, cd(1.0, 0.0), -1.0);
  for (int b = 0; b < n1; ++b)
    for (int a = b + 1; a < n1; ++a) {
      add_psd_coeff(B, psd, sc, L.re(a, b), a, b, cd(1.0, 0.0), -1.0);
      add_psd_coeff(B, psd, sc, L.im(a, b), a, b, cd(0.0, 1.0), -1.0);
    }
  // Gamma q in the last column
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n1; ++j) {
      cd g = gamma.entries(j, i);
      if (g != cd(0.0, 0.0)) add_psd_coeff(B, psd, sc, q0 + i, j, n1, g, -1.0);
    }

  // trace conditions: diagonal sum 1, superdiagonal sums 0 (re and im)
  int tr = B.begin_block(ConeSpec::zero(1 + 2 * 2 * K));
  for (int a = 0; a < n1; ++a) B.set_entry(tr, L.re(a, a), 1.0);
  B.set_rhs(tr, 1.0);
  for (int j = 1; j <= 2 * K; ++j) {
    for (int a = 0; a + j < n1; ++a) {
      B.set_entry(tr + 2 * j - 1, L.re(a + j, a), 1.0);
      B.set_entry(tr + 2 * j, L.im(a + j, a), 1.0);
    }
  }

  // <q, A lambda_k> = 0
  const int r = static_cast<int>(kernel.rows.rows());
  if (r > 0) {
    int kr = B.begin_block(ConeSpec::zero(r));
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < m; ++i)
        if (kernel.rows(k, i) != 0.0) B.set_entry(kr + k, q0 + i, kernel.rows(k, i));
  }

  detail::append_conjugate_objective(B, f, q0);

  TrigDualProgram prog;
  prog.problem = B.build();
  prog.q_offset = q0;
  prog.m = m;
  prog.psd_side_complex = sc;
  return prog;
}

TrigDualResult solve_dual_sdp(const GammaMatrix& gamma, const TrigKernelData& kernel,
                              const Fidelity& f, const SolverSettings& settings) {
  TrigDualProgram prog = assemble_dual_sdp(gamma, kernel, f);
  ConicSolution sol = solve(prog.problem, settings);
  TrigDualResult res;
  res.q = sol.x.segment(prog.q_offset, prog.m);
  res.objective = -sol.objective;
  res.conic = std::move(sol);
  return res;
}

// ---------------------------------------------------------------------------
// root extraction

namespace {

// EISPACK-style balancing (radix-2 similarity scaling).
void balance_inplace(Eigen::MatrixXcd& A) {
  const int n = static_cast<int>(A.rows());
  bool done = false;
  int sweeps = 0;
  while (!done && sweeps++ < 100) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(A(j, i));
        r += std::abs(A(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / 2.0, fscale = 1.0, s = c + r;
      while (c < g) {
        fscale *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        fscale /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / fscale < 0.95 * s) {
        done = false;
        A.row(i) /= fscale;
        A.col(i) *= fscale;
      }
    }
  }
}

std::vector<cd> companion_roots(const Eigen::VectorXcd& poly) {
  // poly: coefficients low to high, leading coefficient nonzero
  const int deg = static_cast<int>(poly.size()) - 1;
  if (deg < 1) return {};
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) C(i, deg - 1) = -poly(i) / poly(deg);
  balance_inplace(C);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("companion eigenvalue computation failed");
  std::vector<cd> roots(es.eigenvalues().data(), es.eigenvalues().data() + deg);
  return roots;
}

}  // namespace

CertificateRoots find_unit_modulus_roots(const TrigPoly& eta, double root_tol_radius,
                                         double root_tol_value, double cluster_radius,
                                         bool polish) {
  const int K = eta.degree();
  const auto& c = eta.coeffs();

  {  // certificate feasibility precheck on a coarse grid
    int grid = std::max(512, 16 * (2 * K + 1));
    double mx = 0.0;
    for (int g = 0; g < grid; ++g)
      mx = std::max(mx, std::abs(eta.eval_complex(static_cast<double>(g) / grid)));
    if (mx > 1.0 + std::max(root_tol_value, 1e-4))
      throw std::invalid_argument(
          "find_unit_modulus_roots: ||eta||_inf exceeds 1 beyond tolerance");
  }

  // g = 1 - eta conj(eta): Laurent coefficients by autocorrelation
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(4 * K + 1);  // k = -2K..2K at k+2K
  for (int k = -2 * K; k <= 2 * K; ++k) {
    cd u(0.0, 0.0);
    for (int j = -K; j <= K; ++j) {
      int jj = j - k;
      if (jj < -K || jj > K) continue;
      u += c(j + K) * std::conj(c(jj + K));
    }
    g(k + 2 * K) = ((k == 0) ? cd(1.0, 0.0) : cd(0.0, 0.0)) - u;
  }

  double gmax = g.cwiseAbs().maxCoeff();
  if (gmax <= 1e-14) {
    // |eta| identically 1: the unit-modulus set is the whole torus
    throw std::runtime_error(
        "find_unit_modulus_roots: certificate has constant modulus 1 "
        "(continuum unit set, no finite support)");
  }

  // trim near-zero leading/trailing coefficients before the companion step
  int lo = 0, hi = 4 * K;
  const double trim_tol = 1e-14 * gmax;
  while (lo < hi && std::abs(g(lo)) <= trim_tol) ++lo;
  while (hi > lo && std::abs(g(hi)) <= trim_tol) --hi;
  Eigen::VectorXcd poly = g.segment(lo, hi - lo + 1);

  CertificateRoots out;
  if (poly.size() <= 1) return out;

  std::vector<cd> roots = companion_roots(poly);

  // keep near-unit-circle roots, map to torus positions
  std::vector<double> ts;
  for (const cd& z : roots) {
    double rad = std::abs(z);
    if (std::abs(rad - 1.0) > root_tol_radius) continue;
    ts.push_back(wrap01(-std::arg(z) / kTwoPi));
  }
  if (ts.empty()) return out;
  std::sort(ts.begin(), ts.end());

  // cluster (including the wrap-around pair)
  std::vector<double> centers;
  {
    std::vector<std::vector<double>> clusters;
    for (double t : ts) {
      if (!clusters.empty() && t - clusters.back().back() <= cluster_radius)
        clusters.back().push_back(t);
      else
        clusters.push_back({t});
    }
    if (clusters.size() > 1) {
      double wrap_gap = clusters.front().front() + 1.0 - clusters.back().back();
      if (wrap_gap <= cluster_radius) {
        for (double t : clusters.back()) clusters.front().push_back(t - 1.0);
        clusters.pop_back();
      }
    }
    for (auto& cl : clusters) {
      double s = 0.0;
      for (double t : cl) s += t;
      centers.push_back(wrap01(s / static_cast<double>(cl.size())));
    }
  }

  if (polish) {
    for (double& t : centers) {
      double t_cur = t;
      for (int it = 0; it < 12; ++it) {
        double d1 = eta.deriv1(t_cur);
        cd e0 = eta.eval_complex(t_cur);
        cd e1 = eta.eval_deriv(t_cur, 1);
        cd e2 = eta.eval_deriv(t_cur, 2);
        double d2 = 2.0 * std::real(e2 * std::conj(e0)) + 2.0 * std::norm(e1);
        if (d2 >= 0.0) break;  // not a local maximum of |eta|^2
        double step = d1 / d2;
        if (!std::isfinite(step)) break;
        step = std::clamp(step, -10.0 * cluster_radius - 1e-4,
                          10.0 * cluster_radius + 1e-4);
        t_cur = wrap01(t_cur - step);
        if (std::abs(step) < 1e-16) break;
      }
      if (std::abs(eta.eval_complex(t_cur)) >= std::abs(eta.eval_complex(t)))
        t = t_cur;
    }
  }

  // final filter on |eta| and dedupe
  std::sort(centers.begin(), centers.end());
  for (double t : centers) {
    double mod = std::abs(eta.eval_complex(t));
    if (mod < 1.0 - root_tol_value) continue;
    if (!out.positions.empty() &&
        torus_dist(out.positions.back(), t) <= cluster_radius)
      continue;
    out.positions.push_back(t);
    out.moduli.push_back(mod);
  }
  if (out.positions.size() > 1 &&
      torus_dist(out.positions.front(), out.positions.back()) <= cluster_radius) {
    out.positions.pop_back();
    out.moduli.pop_back();
  }
  return out;
}

// ---------------------------------------------------------------------------
// refit

RefitResult refit_primal(const std::vector<double>& positions,
                         const GammaMatrix& gamma, const TrigKernelData& kernel,
                         const Fidelity& f, const SolverSettings& settings) {
  const int m = gamma.m;
  const int p = static_cast<int>(positions.size());
  const int r = static_cast<int>(kernel.rows.rows());
  if (f.m() != m) throw std::invalid_argument("refit_primal: fidelity length != m");
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (torus_dist(positions[a], positions[b]) < 1e-12)
        throw std::invalid_argument("refit_primal: positions must be distinct");

  if (r + p == 0) {
    RefitResult res;
    res.measure = DiscreteMeasure(1);
    res.kernel_coeffs = Eigen::VectorXd(0);
    res.objective = f.eval(Eigen::VectorXd::Zero(m));
    return res;
  }

  std::vector<TrigPoly> rho;
  rho.reserve(m);
  for (int i = 0; i < m; ++i) rho.push_back(gamma.column(i));

  Eigen::MatrixXd M(m, r + p);
  for (int k = 0; k < r; ++k) M.col(k) = kernel.rows.row(k).transpose();
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < m; ++i) M(i, r + j) = rho[i].eval(positions[j]);

  Fidelity fid = f;
  if (f.kind() == Fidelity::Kind::EqualityTo && r + p > 0) {
    // Positions carry root-extraction noise, so exact equality may be
    // unattainable; project b onto ran(M) when the defect is below tolerance.
    Eigen::VectorXd z = M.colPivHouseholderQr().solve(f.b());
    Eigen::VectorXd b_proj = M * z;
    double defect = (b_proj - f.b()).norm();
    if (defect <= 1e-6 * (1.0 + f.b().norm()) && defect > 0.0)
      fid = Fidelity::equality_to(b_proj);
  }

  ProblemBuilder B;
  int c0 = B.add_vars(r, 0.0);
  int dp = B.add_vars(p, 1.0);
  int dn = B.add_vars(p, 1.0);
  std::vector<detail::AffineRow> y(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < r; ++k) y[i].terms.push_back({c0 + k, M(i, k)});
    for (int j = 0; j < p; ++j) {
      y[i].terms.push_back({dp + j, M(i, r + j)});
      y[i].terms.push_back({dn + j, -M(i, r + j)});
    }
  }
  detail::append_fidelity_epigraph(B, fid, y);
  if (p > 0) {
    int nn = B.begin_block(ConeSpec::nonneg(2 * p));
    for (int j = 0; j < p; ++j) {
      B.set_entry(nn + j, dp + j, -1.0);
      B.set_entry(nn + p + j, dn + j, -1.0);
    }
  }
  if (kernel.zero_mean_atoms && p > 0) {
    int zr = B.begin_block(ConeSpec::zero(1));
    for (int j = 0; j < p; ++j) {
      B.set_entry(zr, dp + j, 1.0);
      B.set_entry(zr, dn + j, -1.0);
    }
  }

  ConicSolution sol = solve(B.build(), settings);

  RefitResult res;
  res.kernel_coeffs.resize(r);
  for (int k = 0; k < r; ++k) res.kernel_coeffs(k) = sol.x(c0 + k);
  std::vector<Atom> atoms;
  for (int j = 0; j < p; ++j) {
    double d = sol.x(dp + j) - sol.x(dn + j);
    if (std::abs(d) >= 1e-8) atoms.emplace_back(positions[j], d);
  }
  res.measure = DiscreteMeasure(1, std::move(atoms));
  res.objective = sol.objective;
  res.conic = std::move(sol);
  return res;
}

Eigen::VectorXd measure_with_trig(const DiscreteMeasure& mu,
                                  const Eigen::VectorXd& kernel_coeffs,
                                  const GammaMatrix& gamma,
                                  const TrigKernelData& kernel) {
  if (mu.dim() != 1) throw std::invalid_argument("measure_with_trig: 1-D atoms required");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(gamma.m);
  for (int i = 0; i < gamma.m; ++i) {
    TrigPoly rho = gamma.column(i);
    for (const Atom& a : mu.atoms()) b(i) += a.weight * rho.eval(a.position(0));
  }
  if (kernel.rows.rows() > 0) b += kernel.rows.transpose() * kernel_coeffs;
  return b;
}

Eigen::VectorXcd derivative_torus_a_to_rho(const Eigen::VectorXcd& a_coeffs) {
  if (a_coeffs.size() % 2 == 0)
    throw std::invalid_argument("derivative_torus_a_to_rho: need odd length (j = -K..K)");
  int K = (static_cast<int>(a_coeffs.size()) - 1) / 2;
  Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(a_coeffs.size());
  for (int j = -K; j <= K; ++j) {
    if (j == 0) continue;  // the mean has no primitive on the torus range
    rho(j + K) = a_coeffs(j + K) / cd(0.0, kTwoPi * j);
  }
  return rho;
}

}  // namespace tvexact
