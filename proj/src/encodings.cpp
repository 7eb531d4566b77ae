#include "encodings.hpp"

namespace tvexact::detail {

void append_fidelity_epigraph(ProblemBuilder& B, const Fidelity& f,
                              const std::vector<AffineRow>& y) {
  const int m = f.m();
  switch (f.kind()) {
    case Fidelity::Kind::EqualityTo: {
      int row = B.begin_block(ConeSpec::zero(m));
      for (int i = 0; i < m; ++i) {
        for (auto& [v, c] : y[i].terms) B.set_entry(row + i, v, c);
        B.set_rhs(row + i, f.b()(i));
      }
      break;
    }
    case Fidelity::Kind::Quadratic: {
      // w >= ||C^{-1}(y - b)||^2 via ||(2 C^{-1}(y-b), w-1)|| <= w+1
      int w = B.add_vars(1, 0.5 * f.lambda());
      int row = B.begin_block(ConeSpec::second_order(m + 2));
      B.set_entry(row, w, -1.0);
      B.set_rhs(row, 1.0);
      for (int i = 0; i < m; ++i) {
        double ci = 2.0 / f.c_diag()(i);
        for (auto& [v, c] : y[i].terms) B.set_entry(row + 1 + i, v, -ci * c);
        B.set_rhs(row + 1 + i, -ci * f.b()(i));
      }
      B.set_entry(row + m + 1, w, -1.0);
      B.set_rhs(row + m + 1, -1.0);
      break;
    }
    case Fidelity::Kind::L1: {
      // y - b = p - n, p, n >= 0, cost lambda * 1'(p + n)
      int pos = B.add_vars(m, f.lambda());
      int neg = B.add_vars(m, f.lambda());
      int eq = B.begin_block(ConeSpec::zero(m));
      for (int i = 0; i < m; ++i) {
        for (auto& [v, c] : y[i].terms) B.set_entry(eq + i, v, c);
        B.set_entry(eq + i, pos + i, -1.0);
        B.set_entry(eq + i, neg + i, 1.0);
        B.set_rhs(eq + i, f.b()(i));
      }
      int nn = B.begin_block(ConeSpec::nonneg(2 * m));
      for (int i = 0; i < m; ++i) {
        B.set_entry(nn + i, pos + i, -1.0);
        B.set_entry(nn + m + i, neg + i, -1.0);
      }
      break;
    }
    case Fidelity::Kind::BoxQuant: {
      // -1 <= C(y - b) <= 1
      int row = B.begin_block(ConeSpec::box(m, -1.0, 1.0));
      for (int i = 0; i < m; ++i) {
        double ci = f.c_diag()(i);
        for (auto& [v, c] : y[i].terms) B.set_entry(row + i, v, -ci * c);
        B.set_rhs(row + i, -ci * f.b()(i));
      }
      break;
    }
  }
}

void append_conjugate_objective(ProblemBuilder& B, const Fidelity& f, int q0) {
  const int m = f.m();
  for (int i = 0; i < m; ++i) B.add_cost(q0 + i, f.b()(i));
  switch (f.kind()) {
    case Fidelity::Kind::EqualityTo:
      break;  // <q, b> only
    case Fidelity::Kind::Quadratic: {
      // + ||C q||^2 / (2 lambda), exactly, as a diagonal quadratic term; an
      // epigraph variable here would carry magnitude ||C q*||^2 and cripple
      // the splitting iteration's scaling
      for (int i = 0; i < m; ++i)
        B.add_quad(q0 + i, f.c_diag()(i) * f.c_diag()(i) / f.lambda());
      break;
    }
    case Fidelity::Kind::L1: {
      // + indicator of ||q||_inf <= lambda
      int row = B.begin_block(ConeSpec::box(m, -f.lambda(), f.lambda()));
      for (int i = 0; i < m; ++i) B.set_entry(row + i, q0 + i, -1.0);
      break;
    }
    case Fidelity::Kind::BoxQuant: {
      // + sum_i |q_i| / C_ii through t_i >= |q_i|
      int t = B.add_vars(m, 0.0);
      for (int i = 0; i < m; ++i) B.add_cost(t + i, 1.0 / f.c_diag()(i));
      int row = B.begin_block(ConeSpec::nonneg(2 * m));
      for (int i = 0; i < m; ++i) {
        B.set_entry(row + i, t + i, -1.0);
        B.set_entry(row + i, q0 + i, 1.0);
        B.set_entry(row + m + i, t + i, -1.0);
        B.set_entry(row + m + i, q0 + i, -1.0);
      }
      break;
    }
  }
}

}  // namespace tvexact::detail
