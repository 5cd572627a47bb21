#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cbfed/conditions.hpp"
#include "cbfed/optimize.hpp"

namespace cbfed {

/// Named analytic fields. Vector fields: zero, ex1_u_d, ex1_f0, ex2_u_d,
/// ex2_f0, ex3_u_d, ex3_f0, bump_x = (sin(pi x) sin(pi y), 0). Scalar fields: zero, ex1_p_d, ex2_p_d, ex3_p_d.
/// Throws ConfigurationError for unknown names.
VectorFunction vector_field(const std::string& name);
ScalarFunction scalar_field(const std::string& name);

struct ExperimentConfig {
    /// 1, 2 or 3 for a catalog example, 0 for a fully explicit setup.
    int example = 0;
    ModelParams params;
    SlipLaw law;
    CostWeights weights;
    std::string u_d = "zero";
    std::string p_d = "zero";
    std::string f0 = "zero";
    std::vector<int> meshes = {4, 8, 12, 16};
    int reference = 25;
    SolverConfig solver;
    OptConfig opt;
    AnalyticConstants constants;
    std::string out_dir = "out";
    unsigned long long seed = 1;

    /// Throws ConfigurationError on invalid parameters, unknown fields or an
    /// unsorted mesh list.
    void validate() const;
};

/// Parameters of the three numerical examples (unit square, slip on top).
ExperimentConfig example_config(int id);

/// Optimized result on one mesh.
struct MeshRun {
    int n = 0;
    double h = 0.0;
    std::unique_ptr<FeSpace> space;
    SpectralConstants spectral;
    OptResult result;
};

/// Runs the projected subgradient loop from the interpolated f0 on an n x n
/// mesh. Every state is checked against the energy bound.
MeshRun run_on_mesh(const ExperimentConfig& cfg, int n);

struct FieldErrors {
    double u_l2 = 0.0;
    double u_v = 0.0;
    double p_l2 = 0.0;
    double f_l2 = 0.0;
};

/// Differences between fields on `coarse` and fields on `fine`, integrated
/// with the quadrature of the fine mesh.
FieldErrors cross_mesh_errors(const FeSpace& coarse, const Vector& u, const Vector& p, const Vector& f,
                              const FeSpace& fine, const Vector& u_ref, const Vector& p_ref, const Vector& f_ref);

struct ErrorRow {
    int n = 0;
    double h = 0.0;
    FieldErrors absolute;
    FieldErrors relative;
    int iterations = 0;
    bool converged = false;
};

struct ConvergenceTable {
    int reference = 0;
    FieldErrors reference_norms;
    std::vector<ErrorRow> rows;
};

/// Optimizes on every mesh and on the reference mesh and tabulates the
/// errors against the reference. If `runs` is non-null the per-mesh runs
/// (reference last) are handed back.
ConvergenceTable convergence_study(const ExperimentConfig& cfg, std::vector<MeshRun>* runs = nullptr);

/// CSV columns: n,h,u_l2,u_v,p_l2,f_l2,u_l2_rel,u_v_rel,p_l2_rel,f_l2_rel,
/// iterations,converged.
void write_convergence_csv(const ConvergenceTable& table, std::ostream& os);

/// Writes below cfg.out_dir: convergence.csv, cost_history_n<N>.csv per
/// mesh, summary.json (per-mesh lambda0, iterations, costs and worst energy
/// ratio) and fields_n<ref>.vtk.
ConvergenceTable run_example(const ExperimentConfig& cfg);

} // namespace cbfed
