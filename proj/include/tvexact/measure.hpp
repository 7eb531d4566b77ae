#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tvexact {

/// One weighted Dirac mass d * delta_x.
struct Atom {
  Eigen::VectorXd position;
  double weight = 0.0;

  Atom() = default;
  Atom(Eigen::VectorXd pos, double w) : position(std::move(pos)), weight(w) {}
  Atom(double pos, double w) : position(Eigen::VectorXd::Constant(1, pos)), weight(w) {}
};

/// Finite atomic measure sum_k d_k delta_{x_k} on a subset of R^d.
/// Immutable once built; all operations below are pure.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(int dim) : dim_(dim) {}
  DiscreteMeasure(int dim, std::vector<Atom> atoms);

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

 private:
  int dim_ = 1;
  std::vector<Atom> atoms_;
};

/// Convex polytope (a simplex in practice) used as a merging region.
struct Region {
  int id = 0;
  std::vector<Eigen::VectorXd> vertices;

  /// Closed containment test. For 1-simplices an interval check, for
  /// d-simplices a barycentric-coordinate check.
  bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const;
};

/// Sum of absolute atom weights.
double tv_norm(const DiscreteMeasure& mu);

/// <f, mu> = sum_k d_k f(x_k).
double pair(const DiscreteMeasure& mu,
            const std::function<double(const Eigen::VectorXd&)>& f);

/// 1-D convenience overload.
double pair(const DiscreteMeasure& mu, const std::function<double(double)>& f);

/// Merge atoms within tau_pos of each other (sup-norm); merged position is
/// the |weight|-averaged mean, merged weight the signed sum. Exact
/// cancellations are dropped. Iterates to a fixpoint, so the result is stable
/// under re-coalescing.
DiscreteMeasure coalesce(const DiscreteMeasure& mu, double tau_pos = 1e-9);

/// Combine same-signed peaks into one: d = sum d_i, x = (1/d) sum d_i x_i.
/// Preserves the zeroth moment and all affine moments over any region
/// containing the positions' convex hull. Throws on mixed signs.
Atom merge_group(const std::vector<Atom>& atoms);

/// Drop atoms below amp_threshold, then merge, per region and per sign, the
/// groups of atoms lying in that region's closure. Atoms are consumed only by
/// groups of two or more, so isolated atoms on shared faces stay unmerged;
/// regions are scanned in id order. Throws if a surviving atom fits no region.
DiscreteMeasure sparsify_in_regions(const DiscreteMeasure& mu,
                                    const std::vector<Region>& regions,
                                    double amp_threshold = 1e-8);

struct PurifyResult {
  Eigen::VectorXd u;
  int support_size = 0;
  bool fully_reduced = true;  // false when rank deficiency stopped the loop
};

/// Caratheodory-style support reduction for an optimal point of
///   min ||u||_1  s.t.  G u = b.
/// Pivots along null-space directions of G restricted to supp(u) until the
/// support has at most m = rows(G) entries, never increasing the l1 norm and
/// keeping G u = b. Optimality of the input is assumed, not verified.
PurifyResult purify_support(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                            Eigen::VectorXd u);

/// CSV with header x1,...,xd,weight; 17 significant digits.
void write_atoms_csv(std::ostream& os, const DiscreteMeasure& mu);
void write_atoms_csv(const std::string& path, const DiscreteMeasure& mu);
DiscreteMeasure read_atoms_csv(std::istream& is);
DiscreteMeasure read_atoms_csv(const std::string& path);

}  // namespace tvexact
