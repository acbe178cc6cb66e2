#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cdshear/problem.hpp"

namespace {

struct CommonArgs {
    std::string spec_path;
    std::string out_override;
    int grid_scale = 1;
    std::int64_t seed = -1;  // <0: use the problem file's seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("spec", args.spec_path, "problem file (JSON)")->required();
    cmd->add_option("--out", args.out_override, "output directory (overrides the problem file)");
    cmd->add_option("--grid-scale", args.grid_scale, "multiply nx, ny for convergence studies")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "override the oracle seed");
}

int run_solve(const CommonArgs& args, bool analysis_only) {
    cdshear::ProblemSpec p = cdshear::load_problem(args.spec_path);
    if (analysis_only) {
        // analyze: convexity verdicts only, no oracle, keep the field solve
        // cheap by forcing the global branch
        p.oracle_enabled = false;
        p.analysis_gqc = true;
        p.analysis_knowles = true;
        p.branches = cdshear::BranchSelect::Global;
    }
    std::optional<std::uint64_t> seed;
    if (args.seed >= 0) seed = static_cast<std::uint64_t>(args.seed);
    const cdshear::RunResult run = cdshear::run_problem(p, args.grid_scale, seed);
    const std::string out_dir = args.out_override.empty() ? p.out_dir : args.out_override;
    cdshear::write_outputs(run, p, out_dir);
    std::cout << out_dir << "/report.json written\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"canonical-dual solver for anti-plane shear problems"};
    app.require_subcommand(1);

    CommonArgs solve_args, check_args, analyze_args;
    CLI::App* solve = app.add_subcommand("solve", "solve the problem and write outputs");
    add_common(solve, solve_args);
    CLI::App* check = app.add_subcommand("check", "validate the problem file only");
    add_common(check, check_args);
    CLI::App* analyze = app.add_subcommand("analyze", "run the convexity analyzers only");
    add_common(analyze, analyze_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(solve_args, false);
        if (analyze->parsed()) return run_solve(analyze_args, true);
        // check: parse, validate, and build the domain without solving
        const cdshear::ProblemSpec p = cdshear::load_problem(check_args.spec_path);
        cdshear::build_domain(p, check_args.grid_scale);
        std::cout << check_args.spec_path << ": ok\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cdshear::exit_code_for(e);
    }
}
