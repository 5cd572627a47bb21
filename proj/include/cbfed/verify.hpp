#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cbfed/fem.hpp"
#include "cbfed/friction.hpp"

namespace cbfed {

/// Outcome of one numerical check. A margin is the (scaled) amount by which
/// the checked inequality holds; pass <=> worst_margin >= -tolerance.
struct CheckReport {
    std::string name;
    long long samples = 0;
    double worst_margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    /// Description of the sample with the worst margin.
    std::string location;
};

/// Default seed of every sampling check.
inline constexpr unsigned long long default_verify_seed = 20240601ULL;

/// Both lower bounds on <C(u) - C(v), u - v> for C(u) = |u|^{r-1} u on
/// Gaussian pairs in R^2. Margins are (lhs - bound) / max(1, lhs); tolerance
/// 1e-12. Throws std::invalid_argument for r < 1.
CheckReport check_pointwise_monotonicity(double r, int samples, unsigned long long seed = default_verify_seed);

/// power_map_derivative against central differences of power_map on
/// Gaussian (u, v); margin is 1e-7 minus the relative error.
CheckReport check_gateaux(double r, int samples, unsigned long long seed = default_verify_seed);

/// Identities of the forms on `space`:
///   a(u,u) = 2 ||u||_V^2 and |a(u,v)| <= 2 ||u||_V ||v||_V for random
///   discrete fields, a(u,u) = 0 for a constant field,
///   c(u,u) = ||u||^{r+1}_{L^{r+1}} against a refined quadrature,
///   b(u,v,v) = 0 and b(u,v,w) = -b(u,w,v) for the divergence-free field
///   ex3_u_d, and assemble_oseen against a direct evaluation of b.
std::vector<CheckReport> check_form_identities(const FeSpace& space, double r = 3.0, int fields = 100,
                                               unsigned long long seed = default_verify_seed);

struct InfSupEstimate {
    double theta1 = 0.0;
    int mesh_n = 0;
    int velocity_order = 2;
    /// Pressure modes beyond the constants with d(v, q) = 0 for all v.
    int spurious_modes = 0;
};

/// Discrete inf-sup constant of d on V0 x Q (zero trace on the whole
/// boundary, zero-mean pressure), from the dense generalized eigenproblem of
/// the pressure Schur complement D K^{-1} D^T against the pressure mass,
/// with K the V inner product.
InfSupEstimate estimate_inf_sup(const FeSpace& space);

/// theta1 >= threshold on every mesh of `meshes` and relative variation
/// below `variation` between the last two.
CheckReport check_inf_sup(const std::vector<int>& meshes = {2, 4, 8}, double threshold = 0.1,
                          double variation = 0.2);

/// Trace inequality with the computed lambda0 on random discrete fields,
/// equality at the eigenfunction, zero trace of interior fields, and the
/// bound j0(x; y) <= (k0 + k1 |x|) |y| with j0 estimated from difference
/// quotients of j(z) = int_0^|z| omega.
std::vector<CheckReport> check_trace_and_j0(const FeSpace& space, const SlipLaw& law, int samples = 100,
                                            unsigned long long seed = default_verify_seed);

/// The full suite used by the `verify` subcommand.
std::vector<CheckReport> run_all_checks(const SlipLaw& law, unsigned long long seed = default_verify_seed);

bool all_passed(const std::vector<CheckReport>& reports);

/// JSON array with one object per report.
void write_reports_json(const std::vector<CheckReport>& reports, std::ostream& os);

} // namespace cbfed
