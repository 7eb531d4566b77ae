#include "tvexact/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tvexact {

DiscreteMeasure::DiscreteMeasure(int dim, std::vector<Atom> atoms)
    : dim_(dim), atoms_(std::move(atoms)) {
  for (const Atom& a : atoms_) {
    if (a.position.size() != dim_)
      throw std::invalid_argument("atom dimension does not match measure dimension");
    if (!std::isfinite(a.weight))
      throw std::invalid_argument("atom weight must be finite");
  }
}

bool Region::contains(const Eigen::VectorXd& x, double tol) const {
  if (vertices.empty()) return false;
  const int d = static_cast<int>(x.size());
  if (static_cast<int>(vertices.size()) == d + 1) {
    // Simplex: solve for barycentric coordinates.
    Eigen::MatrixXd T(d, d);
    for (int j = 0; j < d; ++j) T.col(j) = vertices[j + 1] - vertices[0];
    Eigen::VectorXd lambda = T.fullPivLu().solve(x - vertices[0]);
    double sum = lambda.sum();
    if (sum > 1.0 + tol) return false;
    for (int j = 0; j < d; ++j)
      if (lambda(j) < -tol) return false;
    return true;
  }
  if (d == 1) {
    double lo = vertices.front()(0), hi = lo;
    for (const auto& v : vertices) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    return x(0) >= lo - tol && x(0) <= hi + tol;
  }
  throw std::invalid_argument("Region::contains supports simplices and 1-D intervals");
}

double tv_norm(const DiscreteMeasure& mu) {
  double s = 0.0;
  for (const Atom& a : mu.atoms()) s += std::abs(a.weight);
  return s;
}

double pair(const DiscreteMeasure& mu,
            const std::function<double(const Eigen::VectorXd&)>& f) {
  double s = 0.0;
  for (const Atom& a : mu.atoms()) s += a.weight * f(a.position);
  return s;
}

double pair(const DiscreteMeasure& mu, const std::function<double(double)>& f) {
  if (mu.dim() != 1) throw std::invalid_argument("1-D pairing on a measure of dim != 1");
  double s = 0.0;
  for (const Atom& a : mu.atoms()) s += a.weight * f(a.position(0));
  return s;
}

namespace {

bool close_sup(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tau) {
  return (a - b).lpNorm<Eigen::Infinity>() <= tau;
}

// One clustering pass; returns true if anything merged.
bool coalesce_pass(std::vector<Atom>& atoms, double tau) {
  std::vector<Atom> out;
  std::vector<double> abs_mass;  // |weight| totals, for the position average
  bool merged = false;
  for (const Atom& a : atoms) {
    bool placed = false;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (close_sup(out[k].position, a.position, tau)) {
        double wa = std::abs(a.weight);
        double total = abs_mass[k] + wa;
        if (total > 0.0)
          out[k].position = (abs_mass[k] * out[k].position + wa * a.position) / total;
        out[k].weight += a.weight;
        abs_mass[k] = total;
        placed = true;
        merged = true;
        break;
      }
    }
    if (!placed) {
      out.push_back(a);
      abs_mass.push_back(std::abs(a.weight));
    }
  }
  atoms = std::move(out);
  return merged;
}

}  // namespace

DiscreteMeasure coalesce(const DiscreteMeasure& mu, double tau_pos) {
  if (tau_pos < 0.0) throw std::invalid_argument("coalesce: tau_pos must be >= 0");
  std::vector<Atom> atoms = mu.atoms();
  while (coalesce_pass(atoms, tau_pos)) {
  }
  std::vector<Atom> kept;
  kept.reserve(atoms.size());
  for (const Atom& a : atoms)
    if (a.weight != 0.0) kept.push_back(a);
  return DiscreteMeasure(mu.dim(), std::move(kept));
}

Atom merge_group(const std::vector<Atom>& atoms) {
  if (atoms.empty()) throw std::invalid_argument("merge_group: empty group");
  const double s0 = atoms.front().weight;
  if (s0 == 0.0) throw std::invalid_argument("merge_group: zero weight");
  double total = 0.0;
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(atoms.front().position.size());
  for (const Atom& a : atoms) {
    if (a.weight * s0 <= 0.0)
      throw std::invalid_argument("merge_group: all weights must share a strict sign");
    total += a.weight;
    moment += a.weight * a.position;
  }
  return Atom(Eigen::VectorXd(moment / total), total);
}

DiscreteMeasure sparsify_in_regions(const DiscreteMeasure& mu,
                                    const std::vector<Region>& regions,
                                    double amp_threshold) {
  std::vector<Atom> live;
  for (const Atom& a : mu.atoms())
    if (std::abs(a.weight) >= amp_threshold) live.push_back(a);

  // membership[i] = regions whose closure holds atom i
  std::vector<std::vector<int>> membership(live.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (const Region& r : regions)
      if (r.contains(live[i].position)) membership[i].push_back(r.id);
    if (membership[i].empty())
      throw std::runtime_error("sparsify_in_regions: atom lies in no region");
  }

  std::vector<bool> consumed(live.size(), false);
  std::vector<Atom> out;
  for (const Region& r : regions) {
    for (int sign = -1; sign <= 1; sign += 2) {
      std::vector<int> group;
      for (std::size_t i = 0; i < live.size(); ++i) {
        if (consumed[i]) continue;
        if ((sign > 0) != (live[i].weight > 0.0)) continue;
        if (std::find(membership[i].begin(), membership[i].end(), r.id) !=
            membership[i].end())
          group.push_back(static_cast<int>(i));
      }
      if (group.size() < 2) continue;  // singletons stay where they are
      std::vector<Atom> g;
      for (int i : group) {
        g.push_back(live[i]);
        consumed[i] = true;
      }
      out.push_back(merge_group(g));
    }
  }
  for (std::size_t i = 0; i < live.size(); ++i)
    if (!consumed[i]) out.push_back(live[i]);
  return coalesce(DiscreteMeasure(mu.dim(), std::move(out)), 0.0);
}

PurifyResult purify_support(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                            Eigen::VectorXd u) {
  const int m = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  if (u.size() != n || b.size() != m)
    throw std::invalid_argument("purify_support: dimension mismatch");

  const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
  const double zero_tol = 1e-13 * scale;
  for (int i = 0; i < n; ++i)
    if (std::abs(u(i)) <= zero_tol) u(i) = 0.0;

  PurifyResult res;
  res.fully_reduced = true;
  while (true) {
    std::vector<int> supp;
    for (int i = 0; i < n; ++i)
      if (u(i) != 0.0) supp.push_back(i);
    res.support_size = static_cast<int>(supp.size());
    if (res.support_size <= m) break;

    Eigen::MatrixXd Gs(m, supp.size());
    for (std::size_t k = 0; k < supp.size(); ++k) Gs.col(k) = G.col(supp[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Gs);
    if (lu.dimensionOfKernel() == 0) {
      res.fully_reduced = false;  // numerically full rank: cannot pivot further
      break;
    }
    Eigen::VectorXd v = lu.kernel().col(0);
    v /= v.cwiseAbs().maxCoeff();

    Eigen::VectorXd us(supp.size()), sg(supp.size());
    for (std::size_t k = 0; k < supp.size(); ++k) {
      us(k) = u(supp[k]);
      sg(k) = us(k) > 0.0 ? 1.0 : -1.0;
    }
    const double slope = sg.dot(v);  // d/dt ||u + t v||_1 at t = 0

    // First zero crossing (and which coordinate hits it) along +/- v.
    auto first_cross = [&](double dir) {
      double t_best = std::numeric_limits<double>::infinity();
      int k_best = -1;
      for (std::size_t k = 0; k < supp.size(); ++k) {
        double vk = dir * v(k);
        if (vk == 0.0) continue;
        double t = -us(k) / vk;
        if (t <= 0.0) continue;
        if (t < t_best ||
            (t == t_best && k_best >= 0 &&
             std::abs(us(k)) < std::abs(us(k_best)))) {
          t_best = t;
          k_best = static_cast<int>(k);
        }
      }
      return std::make_pair(t_best, k_best);
    };

    double dir;
    if (slope > 1e-14) {
      dir = -1.0;
    } else if (slope < -1e-14) {
      dir = 1.0;
    } else {
      auto [tp, kp] = first_cross(1.0);
      auto [tm, km] = first_cross(-1.0);
      if (kp < 0) {
        dir = -1.0;
      } else if (km < 0) {
        dir = 1.0;
      } else {
        dir = std::abs(us(kp)) <= std::abs(us(km)) ? 1.0 : -1.0;
      }
    }
    auto [t_step, k_zero] = first_cross(dir);
    if (k_zero < 0) {  // no crossing in the chosen direction; try the other
      dir = -dir;
      std::tie(t_step, k_zero) = first_cross(dir);
      if (k_zero < 0) {
        res.fully_reduced = false;
        break;
      }
    }
    for (std::size_t k = 0; k < supp.size(); ++k) u(supp[k]) += t_step * dir * v(k);
    u(supp[k_zero]) = 0.0;
    for (std::size_t k = 0; k < supp.size(); ++k)
      if (std::abs(u(supp[k])) <= zero_tol) u(supp[k]) = 0.0;
  }
  res.u = std::move(u);
  return res;
}

namespace {
std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace

void write_atoms_csv(std::ostream& os, const DiscreteMeasure& mu) {
  for (int j = 0; j < mu.dim(); ++j) os << "x" << (j + 1) << ",";
  os << "weight\n";
  for (const Atom& a : mu.atoms()) {
    for (int j = 0; j < mu.dim(); ++j) os << fmt17(a.position(j)) << ",";
    os << fmt17(a.weight) << "\n";
  }
}

void write_atoms_csv(const std::string& path, const DiscreteMeasure& mu) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_atoms_csv(os, mu);
}

DiscreteMeasure read_atoms_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("atoms csv: missing header");
  int dim = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "weight") break;
      ++dim;
    }
  }
  if (dim < 1) throw std::runtime_error("atoms csv: bad header");
  std::vector<Atom> atoms;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    Atom a(Eigen::VectorXd(dim), 0.0);
    for (int j = 0; j < dim; ++j) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("atoms csv: short row");
      a.position(j) = std::stod(tok);
    }
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("atoms csv: short row");
    a.weight = std::stod(tok);
    atoms.push_back(std::move(a));
  }
  return DiscreteMeasure(dim, std::move(atoms));
}

DiscreteMeasure read_atoms_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_atoms_csv(is);
}

}  // namespace tvexact
