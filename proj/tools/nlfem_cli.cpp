// nlfem-cli: convergence studies, single assemblies and thread scaling.
//
//   nlfem-cli study --kernel fractional --s 0.5 --delta 0.2 --levels 5,10,20 --out rows.csv
//   nlfem-cli assemble --mesh m.txt --kernel peridynamic --delta 0.1 --matrix-out A.csr
//   nlfem-cli scaling --threads 1,2,4 --levels 40
//
// Any subcommand accepts --config <file> with key=value lines (keys are the flag names without
// dashes). Flags given on the command line win over the file.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlfem/harness.hpp"

using namespace nlfem;

namespace {

struct Flags {
    std::string kernel = "fractional";
    double s = 0.5;
    double delta = 0.2;
    std::vector<double> deltas;
    std::string ball;
    std::string ansatz = "cg";
    std::vector<int> levels;
    std::string mode = "refine-h";
    std::vector<int> threads{1};
    std::string out;
    std::string mesh;
    std::string matrix_out;
    std::string region = "full";
    std::string outer = "7point";
    std::string inner = "7point";
    int gauss1d = 5;
    std::string weak = "avoid";
    std::string rows = "free";
    int repeats = 1;
    std::string config;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "file of key=value lines mirroring the flags");
    app->add_option("--kernel", f.kernel, "fractional | peridynamic | constant-infinity");
    app->add_option("--s", f.s, "fractional order");
    app->add_option("--delta", f.delta, "interaction horizon");
    app->add_option("--ball", f.ball, "nocaps | approxcaps | infinity (kernel default if empty)");
    app->add_option("--ansatz", f.ansatz, "cg | dg");
    app->add_option("--threads", f.threads, "worker threads; a list for scaling")->delimiter(',');
    app->add_option("--quad.outer", f.outer, "outer triangle rule");
    app->add_option("--quad.inner", f.inner, "inner triangle rule");
    app->add_option("--quad.gauss1d", f.gauss1d, "1D Gauss points of the singular rule");
    app->add_option("--quad.weak-singular", f.weak, "avoid | transform");
}

QuadratureConfig quadrature(const Flags& f) {
    QuadratureConfig q;
    q.outer = triangle_rule_by_name(f.outer);
    q.inner = triangle_rule_by_name(f.inner);
    q.gauss_points_1d = f.gauss1d;
    q.weak = parse_weak_singular(f.weak);
    return q;
}

StudyConfig study_config(const Flags& f) {
    StudyConfig c;
    c.kernel = f.kernel;
    c.s = f.s;
    c.delta = f.delta;
    if (!f.ball.empty()) c.ball = parse_ball(f.ball);
    c.ansatz = parse_ansatz(f.ansatz);
    c.levels = f.levels;
    c.deltas = f.deltas;
    c.mode = parse_study_mode(f.mode);
    c.quad = quadrature(f);
    c.threads = f.threads.empty() ? 1 : f.threads.front();
    c.region = parse_error_region(f.region);
    return c;
}

int run_study_command(const Flags& f) {
    StudyConfig c = study_config(f);
    std::printf("%8s %10s %8s %12s %6s %10s\n", "n_div", "delta", "dof", "l2_error", "rate", "asm[s]");
    auto rows = run_study(c, [](const ConvergenceRow& r) {
        std::printf("%8d %10.4g %8d %12.4e %6.2f %10.2f\n", r.n_div, r.delta, r.dof, r.l2_error, r.rate,
                    r.assembly_seconds);
        for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        std::fflush(stdout);
    });
    if (!f.out.empty()) write_rows_csv(rows, f.out);
    return 0;
}

int run_assemble_command(const Flags& f) {
    if (f.mesh.empty()) throw ConfigError("assemble needs --mesh");
    MeshReport report;
    Mesh mesh = read_mesh(f.mesh, &report);
    if (report.reoriented > 0) std::fprintf(stderr, "warning: %d clockwise elements reoriented\n", report.reoriented);
    KernelSpec kernel = kernel_by_name(f.kernel, f.s, f.delta);
    if (!f.ball.empty()) kernel.ball = parse_ball(f.ball);
    AnsatzSpace ansatz = make_ansatz(mesh, parse_ansatz(f.ansatz), kernel.n);
    AssemblyOptions o;
    o.quad = quadrature(f);
    o.n_threads = f.threads.empty() ? 1 : f.threads.front();
    if (f.rows == "all") o.rows = RowScope::AllRows;
    else if (f.rows != "free") throw ConfigError("unknown row scope '" + f.rows + "' (free | all)");
    AssemblyResult res = bfs_assemble(mesh, build_adjacency_graph(mesh), kernel, ansatz, o);
    for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("elements %d, dofs %d (free %d), nnz %lld, pairs %lld, %.2fs\n", mesh.element_count(),
                ansatz.dof_count, ansatz.free_count(), static_cast<long long>(res.system.A.nnz()),
                static_cast<long long>(res.stats.pairs_evaluated), res.stats.seconds);
    if (!f.matrix_out.empty()) write_csr(res.system.A, f.matrix_out);
    return 0;
}

int run_scaling_command(const Flags& f) {
    StudyConfig c = study_config(f);
    if (c.levels.empty()) c.levels = {40};
    ScalingResult res = run_scaling(c, f.threads, f.repeats);
    std::printf("dof %d, nnz %lld\n", res.dof, static_cast<long long>(res.nnz));
    std::printf("%8s %10s %10s\n", "threads", "seconds", "efficiency");
    for (const auto& r : res.rows) std::printf("%8d %10.3f %10.3f\n", r.threads, r.seconds, r.efficiency);
    std::printf("matrices %s\n", res.identical ? "identical" : "DIFFER");
    if (!f.out.empty()) {
        std::ofstream os(f.out);
        if (!os) throw ConfigError("cannot write " + f.out);
        os << "threads,seconds,efficiency\n";
        for (const auto& r : res.rows) os << r.threads << ',' << r.seconds << ',' << r.efficiency << '\n';
    }
    return res.identical ? 0 : 3;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Turns the key=value lines of a config file into "--key=value" arguments.
std::vector<std::string> config_arguments(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    std::vector<std::string> args;
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config") throw ConfigError(path + ":" + std::to_string(no) + ": bad key");
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

// argv with the contents of any --config file spliced in right after the subcommand name. Keys
// also given on the command line are left out, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        std::size_t erase = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            erase = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            erase = 1;
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + erase));
        auto flag_of = [](const std::string& a) { return a.substr(0, a.find('=')); };
        std::vector<std::string> given;
        for (const auto& a : args)
            if (a.rfind("--", 0) == 0) given.push_back(flag_of(a));
        std::vector<std::string> extra;
        for (auto& a : config_arguments(path))
            if (std::find(given.begin(), given.end(), flag_of(a)) == given.end()) extra.push_back(std::move(a));
        std::size_t at = args.size() > 1 ? 2 : 1;
        args.insert(args.begin() + static_cast<long>(at), extra.begin(), extra.end());
        break;
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal finite element assembly and convergence studies"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    Flags f;

    auto* study = app.add_subcommand("study", "convergence study on structured meshes");
    add_common(study, f);
    study->add_option("--levels", f.levels, "comma list of n_div")->delimiter(',');
    study->add_option("--deltas", f.deltas, "comma list of horizons (shrink-delta)")->delimiter(',');
    study->add_option("--mode", f.mode, "refine-h | refine-both | shrink-delta");
    study->add_option("--region", f.region, "error region: full | domain");
    study->add_option("--out", f.out, "CSV output h,delta,dof,l2_error,rate");

    auto* assemble = app.add_subcommand("assemble", "assemble the stiffness matrix of a mesh file");
    add_common(assemble, f);
    assemble->add_option("--mesh", f.mesh, "mesh file")->required();
    assemble->add_option("--matrix-out", f.matrix_out, "CSR output file");
    assemble->add_option("--rows", f.rows, "free | all");

    auto* scaling = app.add_subcommand("scaling", "thread scaling of one assembly");
    add_common(scaling, f);
    scaling->add_option("--levels", f.levels, "n_div of the mesh")->delimiter(',');
    scaling->add_option("--repeats", f.repeats, "timings per thread count, best is kept");
    scaling->add_option("--out", f.out, "CSV output threads,seconds,efficiency");

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<char*> av;
        for (auto& a : args) av.push_back(a.data());
        app.parse(static_cast<int>(av.size()), av.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        if (study->parsed()) return run_study_command(f);
        if (assemble->parsed()) return run_assemble_command(f);
        return run_scaling_command(f);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
