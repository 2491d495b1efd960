#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chase/grid.hpp"
#include "chase/matgen.hpp"
#include "chase/memest.hpp"
#include "chase/solver.hpp"

namespace chase::cli
{

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int
{
    kOk = 0,
    kUsage = 2,
    kNumerical = 3,
    kIo = 4
};

/// Where the matrix comes from: a CHSM file or a generator spec.
struct MatrixSource
{
    std::string path;
    std::optional<matgen::SpectrumSpec> spec;

    friend bool operator==(const MatrixSource&, const MatrixSource&) = default;
};

/// Everything needed to reproduce a run.
struct RunManifest
{
    std::string subcommand;
    MatrixSource source;
    solver::SolverConfig config;
    grid::GridTopology grid;
    std::string output;
    bool write_vectors = false;
    unsigned threads = 1;
    std::string timestamp;
    std::string version = kVersion;

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

nlohmann::json to_json(const solver::RunReport& r);
nlohmann::json to_json(const memest::MemoryEstimate& e);

/// Loads or generates the matrix named by the source.
DenseMatrix load_matrix(const MatrixSource& source);

/// One value per line, 17 significant digits.
void write_eigenvalues(std::ostream& os, const std::vector<double>& values);

/// Solve output: result plus the post-hoc residual check on the raw matrix.
struct SolveOutcome
{
    solver::SolveResult result;
    double max_raw_residual = 0.0;
    bool residual_check = false;
};

/// Runs the manifest's solve and checks every returned pair against `a`.
SolveOutcome run_solve(const DenseMatrix& a, const RunManifest& m);

inline const char* kSweepHeader = "n,nev,nex,grid,iterations,matvecs,lanczos_s,filter_s,qr_s,rr_s,resid_s,all_s,"
                                  "collective_bytes,status";

/// Whole command line: returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace chase::cli
