#pragma once

#include <gsl/gsl_integration.h>

#include <cmath>
#include <vector>

#include "nlqm/fock.hpp"

namespace nlqm {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &rule.nodes[i], &rule.weights[i], t);
    gsl_integration_glfixed_table_free(t);
    return rule;
}

/// Rule for E[f(Z)], Z ~ N(mean, var), from n-point Gauss-Hermite nodes
/// (eigenvalues of the truncated position operator). var = 0 gives one node.
inline QuadratureRule gaussian_expectation_rule(int n, double mean, double var) {
    if (var <= 0.0 || n <= 1) return {{mean}, {1.0}};
    const auto basis = position_eigenbasis(n);
    QuadratureRule rule;
    const double s = std::sqrt(2.0 * var);
    for (int j = 0; j < n; ++j) {
        const double v0 = basis.vectors(0, j);
        rule.nodes.push_back(mean + s * basis.nodes(j));
        rule.weights.push_back(v0 * v0);  // sqrt(pi) v0^2 / sqrt(pi)
    }
    return rule;
}

}  // namespace nlqm
