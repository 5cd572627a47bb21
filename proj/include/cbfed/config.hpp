#pragma once

#include <iosfwd>
#include <string>

#include "cbfed/experiment.hpp"

namespace cbfed {

/// Reads an experiment configuration in a flat TOML subset: `key = value`
/// lines, `#` comments, values that are numbers, booleans, double-quoted
/// strings or arrays of integers. Section headers are not accepted.
///
/// If `example` is given the catalog entry is loaded first and the remaining
/// keys override it, whatever their order in the file. Recognized keys:
///   example, mu, alpha, beta, kappa, r, q, a, b, rho, eps_reg, eta,
///   alpha1, alpha2, alpha3, cost ("R1" | "R2"), u_d, p_d, f0, meshes,
///   reference, eps_hvi, max_outer, max_newton, inner_ratio,
///   method ("uzawa_newton" | "coupled_newton"), tau, delta_fd, eps_opt,
///   max_iter, state_tol, chord_max, fd_subset, exact_regularization,
///   c_k, c_g, c_s, c_b, out_dir, seed.
/// Throws ConfigurationError (with the line number) on syntax errors,
/// unknown or duplicate keys and invalid values.
ExperimentConfig parse_config(std::istream& is, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

} // namespace cbfed
