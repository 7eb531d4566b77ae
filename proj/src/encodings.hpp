#pragma once

// Internal: conic encodings of the fidelity terms, shared by the vertex
// primal/dual and the trigonometric dual/refit assemblers.

#include <utility>
#include <vector>

#include "tvexact/conic.hpp"
#include "tvexact/fidelity.hpp"

namespace tvexact::detail {

/// Sparse affine expression sum_k coef_k * var_k (no constant part).
struct AffineRow {
  std::vector<std::pair<int, double>> terms;
};

/// Adds cost and cone blocks so that the builder's objective gains
/// f_b(y(vars)).
void append_fidelity_epigraph(ProblemBuilder& B, const Fidelity& f,
                              const std::vector<AffineRow>& y);

/// Adds cost and cone blocks so that the builder's objective gains f_b*(q)
/// for the existing variables q0..q0+m-1.
void append_conjugate_objective(ProblemBuilder& B, const Fidelity& f, int q0);

}  // namespace tvexact::detail
