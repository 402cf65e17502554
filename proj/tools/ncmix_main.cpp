// ncmix command line: validate topologies, optimize rate allocations,
// evaluate the analytic delay model, run the packet-level simulator, and
// sweep link capacities for the comparison experiments.

#include <string>

#include <CLI11.hpp>

#include "ncmix/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"inter-session network coding rate allocation"};
    app.require_subcommand(1);

    ncmix::cli::CommonOptions common;
    uint64_t seed = 1;
    std::string out = "out";
    app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
    app.add_option("--out", out, "output stem or directory")->capture_default_str();
    app.add_flag("--quiet", common.quiet, "suppress progress output");
    app.add_option("--symbols", common.symbols, "override every source's symbol count");
    app.add_option("--drop-group", common.drop_group, "remove this link group before running");

    std::string topo_path;
    std::string alloc_path;
    std::string mode = "inter";
    ncmix::SpsaConfig spsa;
    ncmix::SimConfig sim;
    ncmix::cli::SweepSpec sweep;
    std::string modes_csv = "inter,intra";

    auto* validate = app.add_subcommand("validate", "check a topology document");
    validate->add_option("topology", topo_path)->required();

    auto* optimize = app.add_subcommand("optimize", "search a rate allocation via SPSA");
    optimize->add_option("topology", topo_path)->required();
    optimize->add_option("--mode", mode, "inter or intra")->check(CLI::IsMember({"inter", "intra"}));
    optimize->add_option("--iterations", spsa.iterations)->capture_default_str();
    optimize->add_option("--restarts", spsa.restarts)->capture_default_str();
    optimize->add_option("--spsa-a", spsa.a, "step gain (0 = auto)");
    optimize->add_option("--spsa-c", spsa.c, "perturbation gain (0 = auto)");
    optimize->add_option("--penalty", spsa.penalty_weight, "violation penalty weight (0 = auto)");
    optimize->add_option("--threads", spsa.threads, "worker threads (0 = hardware)");

    auto* evaluate = app.add_subcommand("evaluate", "analytic delay for a given allocation");
    evaluate->add_option("topology", topo_path)->required();
    evaluate->add_option("--alloc", alloc_path, "allocation CSV")->required();

    auto* simulate = app.add_subcommand("simulate", "packet-level simulation of an allocation");
    simulate->add_option("topology", topo_path)->required();
    simulate->add_option("--alloc", alloc_path, "allocation CSV")->required();
    simulate->add_option("--replications", sim.replications)->capture_default_str();
    simulate->add_option("--duration", sim.max_time, "per-replication budget in seconds (0 = auto)");
    simulate->add_option("--threads", sim.threads, "worker threads (0 = hardware)");

    auto* sweepc = app.add_subcommand("sweep", "capacity sweep with per-point optimization");
    sweepc->add_option("topology", topo_path)->required();
    sweepc->add_option("--group", sweep.group, "link group to vary")->capture_default_str();
    sweepc->add_option("--start", sweep.start)->capture_default_str();
    sweepc->add_option("--stop", sweep.stop)->capture_default_str();
    sweepc->add_option("--step", sweep.step)->capture_default_str();
    sweepc->add_option("--modes", modes_csv, "comma-separated: inter,intra")->capture_default_str();
    sweepc->add_option("--iterations", spsa.iterations)->capture_default_str();
    sweepc->add_option("--restarts", spsa.restarts)->capture_default_str();
    sweepc->add_option("--threads", spsa.threads, "worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);
    spsa.seed = seed;
    sim.seed = seed;

    if (validate->parsed()) return ncmix::cli::cmd_validate(topo_path, common);
    if (optimize->parsed()) return ncmix::cli::cmd_optimize(topo_path, mode, spsa, out, common);
    if (evaluate->parsed()) return ncmix::cli::cmd_evaluate(topo_path, alloc_path, out, common);
    if (simulate->parsed()) return ncmix::cli::cmd_simulate(topo_path, alloc_path, sim, out, common);
    if (sweepc->parsed()) {
        sweep.modes.clear();
        std::string cur;
        for (char c : modes_csv + ",") {
            if (c == ',') {
                if (!cur.empty()) sweep.modes.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        return ncmix::cli::cmd_sweep(topo_path, sweep, spsa, out, common);
    }
    return 1;
}
