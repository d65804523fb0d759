// dsr — restoration planning toolchain for coupled power/communication
// distribution networks. Subcommands: gen, solve, verify, compare,
// export-milp. Exit codes: 0 success, 1 violations or failed run, 2 input
// error.

#include "CLI11.hpp"

#include "dsr/casefile.hpp"
#include "dsr/generators.hpp"
#include "dsr/milp.hpp"
#include "dsr/planner.hpp"
#include "dsr/report.hpp"
#include "dsr/solver.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace dsr;

int fail_input(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 2;
}

bool read_file(const std::string& path, std::string& out, std::string& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        err = "cannot open " + path;
        return false;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

// write-then-rename so a crash never leaves a truncated artifact
bool write_file_atomic(const std::string& path, const std::string& content, std::string& err) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            err = "cannot write " + tmp;
            return false;
        }
        out << content;
        if (!out.good()) {
            err = "short write to " + tmp;
            return false;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        err = "cannot rename " + tmp + " -> " + path + ": " + ec.message();
        return false;
    }
    return true;
}

int load_case(const std::string& path, CaseParseResult& parsed) {
    std::string text, err;
    if (!read_file(path, text, err)) return fail_input(err);
    parsed = parse_case(text);
    if (!parsed.ok) {
        for (const auto& e : parsed.errors) {
            if (e.line > 0)
                std::cerr << path << ":" << e.line << ":" << e.col << ": " << e.message << "\n";
            else
                std::cerr << path << ": " << e.message << "\n";
        }
        return 2;
    }
    return 0;
}

SolverBackend backend_from(const std::string& s) {
    if (s == "auto") return SolverBackend::automatic;
    if (s == "bb") return SolverBackend::branch_and_bound;
    return SolverBackend::external;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"restoration planning for coupled power/communication networks"};
    app.require_subcommand(1);

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "generate a benchmark case");
    std::string gen_kind, gen_damage = "none", gen_out;
    unsigned long long gen_seed = 1;
    gen_cmd->add_option("feeder", gen_kind, "feeder33 or feeder123")->required();
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    gen_cmd->add_option("--damage", gen_damage, "none|light|severe");
    gen_cmd->add_option("-o,--output", gen_out, "output case file")->required();

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "run one restoration algorithm");
    std::string solve_case, solve_algo = "iclr", solve_out, solve_backend = "auto";
    int solve_max_stages = 10;
    double solve_gap = -1, solve_time_limit = 0;
    solve_cmd->add_option("case", solve_case, "input case file")->required();
    solve_cmd->add_option("--algo", solve_algo, "olr|sclr|iclr");
    solve_cmd->add_option("--max-stages", solve_max_stages, "ICLR stage cap");
    solve_cmd->add_option("--backend", solve_backend, "auto|bb|external");
    solve_cmd->add_option("--gap", solve_gap, "override MILP relative gap");
    solve_cmd->add_option("--time-limit", solve_time_limit, "per-solve limit in seconds");
    solve_cmd->add_option("-o,--output", solve_out, "output plan file")->required();

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "replay a plan through the verifier");
    std::string verify_case, verify_plan_path;
    verify_cmd->add_option("case", verify_case, "input case file")->required();
    verify_cmd->add_option("plan", verify_plan_path, "plan file to check")->required();

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "run OLR, SCLR, and ICLR");
    std::string compare_case, compare_out, compare_backend = "auto";
    bool compare_quiet = false;
    compare_cmd->add_option("case", compare_case, "input case file")->required();
    compare_cmd->add_option("-o,--output", compare_out, "machine-readable report file");
    compare_cmd->add_option("--backend", compare_backend, "auto|bb|external");
    compare_cmd->add_flag("--quiet", compare_quiet, "suppress the text table");

    // export-milp
    auto* export_cmd = app.add_subcommand("export-milp", "write the stage-1 model as LP text");
    std::string export_case, export_out;
    export_cmd->add_option("case", export_case, "input case file")->required();
    export_cmd->add_option("-o,--output", export_out, "output LP file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen_cmd->parsed()) {
            DamageProfile profile = damage_profile_from_string(gen_damage);
            GeneratedCase gen = gen_kind == "feeder33" ? gen_feeder33(gen_seed, profile)
                              : gen_kind == "feeder123"
                                  ? gen_feeder123(gen_seed, profile)
                                  : throw std::invalid_argument("feeder must be feeder33 or feeder123");
            std::string err;
            if (!write_file_atomic(gen_out, emit_case(gen.net, gen.scenario, gen.cfg), err))
                return fail_input(err);
            if (profile == DamageProfile::severe)
                std::cerr << "severe profile settled on seed " << gen.seed_used << " after "
                          << gen.search_attempts << " draw(s)\n";
            return 0;
        }

        if (solve_cmd->parsed()) {
            CaseParseResult parsed;
            if (int rc = load_case(solve_case, parsed)) return rc;
            PlannerOptions opts;
            opts.max_stages = solve_max_stages;
            opts.solver.backend = backend_from(solve_backend);
            if (solve_gap > 0) parsed.cfg.gap = solve_gap;
            if (solve_time_limit > 0) opts.solver.time_limit_s = solve_time_limit;
            RestorationPlan plan;
            if (solve_algo == "olr")
                plan = run_olr(parsed.net, parsed.scenario, parsed.cfg, opts);
            else if (solve_algo == "sclr")
                plan = run_sclr(parsed.net, parsed.scenario, parsed.cfg, opts);
            else if (solve_algo == "iclr")
                plan = run_iclr(parsed.net, parsed.scenario, parsed.cfg, opts);
            else
                return fail_input("--algo must be olr, sclr, or iclr");
            std::string err;
            if (!write_file_atomic(solve_out, plan_to_json(plan), err)) return fail_input(err);
            std::cerr << to_string(plan.algorithm) << ": " << plan.stages.size()
                      << " stage(s), " << plan.total_pickup_kw << " kW picked up\n";
            return 0;
        }

        if (verify_cmd->parsed()) {
            CaseParseResult parsed;
            if (int rc = load_case(verify_case, parsed)) return rc;
            std::string text, err;
            if (!read_file(verify_plan_path, text, err)) return fail_input(err);
            RestorationPlan plan = plan_from_json(text);
            auto violations = verify_plan(parsed.net, parsed.scenario, parsed.cfg, plan);
            for (const auto& v : violations)
                std::cerr << "violation [" << v.code << "] " << v.where << ": " << v.message
                          << "\n";
            if (violations.empty()) {
                std::cerr << "plan verifies cleanly (" << plan.stages.size() << " stage(s), "
                          << plan.total_pickup_kw << " kW)\n";
                return 0;
            }
            return 1;
        }

        if (compare_cmd->parsed()) {
            CaseParseResult parsed;
            if (int rc = load_case(compare_case, parsed)) return rc;
            PlannerOptions opts;
            opts.solver.backend = backend_from(compare_backend);
            CompareReport cmp = compare(parsed.net, parsed.scenario, parsed.cfg, opts);
            Report report = report_from_compare(cmp);
            if (!compare_quiet) std::cout << report_to_text(report);
            if (!compare_out.empty()) {
                std::string err;
                if (!write_file_atomic(compare_out, report_to_json(report), err))
                    return fail_input(err);
            }
            int ok = 0;
            for (const auto& row : cmp.rows) ok += row.failed ? 0 : 1;
            return ok > 0 ? 0 : 1;
        }

        if (export_cmd->parsed()) {
            CaseParseResult parsed;
            if (int rc = load_case(export_case, parsed)) return rc;
            StageState st = StageState::initial(parsed.net, parsed.scenario);
            auto built = build_integrated(parsed.net, parsed.scenario, st, parsed.cfg);
            std::string err;
            if (!write_file_atomic(export_out, to_lp_format(built.model), err))
                return fail_input(err);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
