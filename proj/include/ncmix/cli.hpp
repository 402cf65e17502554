#pragma once

// Command implementations behind the ncmix binary. Kept out of main() so the
// tests can drive them in-process. Exit codes: 0 success, 2 validation
// failure, 3 optimization failure, 4 I/O failure.

#include <cstdio>
#include <string>
#include <vector>

#include "ncmix/allocation.hpp"
#include "ncmix/csv.hpp"
#include "ncmix/delay.hpp"
#include "ncmix/io.hpp"
#include "ncmix/simulator.hpp"
#include "ncmix/spsa.hpp"
#include "ncmix/topology.hpp"

namespace ncmix::cli {

constexpr int kOk = 0;
constexpr int kValidationFailure = 2;
constexpr int kOptimizationFailure = 3;
constexpr int kIoFailure = 4;

struct CommonOptions {
    int symbols = 0;             // 0 = fixture values
    std::string drop_group;      // remove this link group before running
    bool quiet = false;
};

inline void say(const CommonOptions& opt, const std::string& line) {
    if (!opt.quiet) std::fputs((line + "\n").c_str(), stdout);
}

inline Topology load_topology(const std::string& path, const CommonOptions& opt) {
    Topology t = Topology::parse(read_file(path));
    if (!opt.drop_group.empty()) t = t.without_group(opt.drop_group);
    if (opt.symbols > 0) t = t.with_symbols(opt.symbols);
    return t;
}

inline int cmd_validate(const std::string& topo_path, const CommonOptions& opt) {
    try {
        load_topology(topo_path, opt);
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const TopologyError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kValidationFailure;
    }
    say(opt, "ok");
    return kOk;
}

inline std::vector<std::pair<std::string, std::string>> manifest_base(
    const std::string& topo_path, const CommonOptions& opt, uint64_t seed) {
    std::vector<std::pair<std::string, std::string>> f;
    f.push_back({"topology", topo_path});
    f.push_back({"topology_fnv1a64", hex64(fnv1a64(read_file(topo_path)))});
    f.push_back({"seed", std::to_string(seed)});
    if (opt.symbols > 0) f.push_back({"symbols", std::to_string(opt.symbols)});
    if (!opt.drop_group.empty()) f.push_back({"drop_group", opt.drop_group});
    return f;
}

inline int cmd_optimize(const std::string& topo_path, const std::string& mode_str,
                        SpsaConfig spsa, const std::string& out_stem,
                        const CommonOptions& opt) {
    Topology topo;
    try {
        topo = load_topology(topo_path, opt);
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const TopologyError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kValidationFailure;
    }
    const OptimizeMode mode = mode_str == "intra" ? OptimizeMode::intra : OptimizeMode::inter;
    try {
        const TypeLattice lattice = topo.make_lattice();
        const OptimizeResult res = optimize(topo, lattice, spsa, mode);
        write_file(out_stem + "_allocation.csv", allocation_csv(topo, res.allocation));
        write_file(out_stem + "_delay.csv", delay_report_csv(res.report));
        write_file(out_stem + "_trace.csv", trace_csv(res.trace));
        auto fields = manifest_base(topo_path, opt, spsa.seed);
        fields.push_back({"mode", mode_str});
        fields.push_back({"iterations", std::to_string(spsa.iterations)});
        fields.push_back({"restarts", std::to_string(spsa.restarts)});
        fields.push_back({"avg_delay_s", fmt_g(res.objective)});
        write_manifest(out_stem, "optimize", fields);
        say(opt, "average delay " + fmt_g(res.objective) + " s");
        return kOk;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const OptimizeError& e) {
        std::fprintf(stderr, "optimization failed: %s\n%s\n", e.what(), e.snapshot().c_str());
        return kOptimizationFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "optimization failed: %s\n", e.what());
        return kOptimizationFailure;
    }
}

inline int cmd_evaluate(const std::string& topo_path, const std::string& alloc_path,
                        const std::string& out_stem, const CommonOptions& opt) {
    try {
        const Topology topo = load_topology(topo_path, opt);
        const TypeLattice lattice = topo.make_lattice();
        const RateAllocation alloc = read_allocation_csv(alloc_path, topo, lattice);
        const DelayReport rep = average_delay(topo, alloc);
        write_file(out_stem + "_delay.csv", delay_report_csv(rep));
        auto fields = manifest_base(topo_path, opt, 0);
        fields.push_back({"allocation", alloc_path});
        write_manifest(out_stem, "evaluate", fields);
        say(opt, "average delay " + fmt_g(rep.average) + " s");
        return kOk;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kValidationFailure;
    }
}

inline int cmd_simulate(const std::string& topo_path, const std::string& alloc_path,
                        SimConfig sim, const std::string& out_stem, const CommonOptions& opt) {
    try {
        const Topology topo = load_topology(topo_path, opt);
        const TypeLattice lattice = topo.make_lattice();
        const RateAllocation alloc = read_allocation_csv(alloc_path, topo, lattice);
        const DelayReport analytic = average_delay(topo, alloc);
        if (sim.max_time <= 0.0) {
            double dmax = 0.0;
            for (const auto& c : analytic.per_client) dmax = std::max(dmax, c.seconds);
            sim.max_time = std::max(30.0, 20.0 * dmax);
        }
        const Forwarding fw = derive_forwarding(topo, alloc);
        const SimReport rep = run_simulation(topo, fw, sim);
        write_file(out_stem + "_empirical.csv", rep.csv());
        auto fields = manifest_base(topo_path, opt, sim.seed);
        fields.push_back({"allocation", alloc_path});
        fields.push_back({"replications", std::to_string(sim.replications)});
        fields.push_back({"duration_s", fmt_g(sim.max_time)});
        fields.push_back({"event_fnv1a64", hex64(rep.event_hash)});
        write_manifest(out_stem, "simulate", fields);
        for (std::size_t i = 0; i < rep.clients.size(); ++i) {
            const auto& c = rep.clients[i];
            const double model = analytic.per_client[i].seconds;
            const double gap = c.mean_delay > 0.0 ? (c.mean_delay - model) / model : 0.0;
            say(opt, c.client + ": empirical " + fmt_g(c.mean_delay) + " s, analytic " +
                         fmt_g(model) + " s, gap " + fmt_g(100.0 * gap, 3) + "%" +
                         (c.censored > 0 ? " (" + std::to_string(c.censored) + " censored)" : ""));
        }
        return kOk;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kValidationFailure;
    }
}

struct SweepSpec {
    std::string group = "core";
    double start = 1.0;
    double stop = 5.0;
    double step = 1.0;
    std::vector<std::string> modes = {"inter", "intra"};

    void validate() const {
        if (step <= 0.0 || start > stop) throw std::invalid_argument("bad sweep range");
        if (modes.empty()) throw std::invalid_argument("no sweep modes");
    }

    std::vector<double> points() const {
        std::vector<double> out;
        const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
        for (int i = 0; i <= n; ++i) out.push_back(start + i * step);
        return out;
    }
};

inline int cmd_sweep(const std::string& topo_path, const SweepSpec& spec, SpsaConfig spsa,
                     const std::string& out_dir, const CommonOptions& opt) {
    Topology base;
    try {
        spec.validate();
        base = load_topology(topo_path, opt);
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kValidationFailure;
    }
    try {
        std::vector<int> clients = base.clients();
        std::sort(clients.begin(), clients.end(), [&](int a, int b) {
            return base.nodes()[a].name < base.nodes()[b].name;
        });
        std::string summary = "capacity,mode,avg_delay_s";
        for (int c : clients) summary += ",delay_" + base.nodes()[c].name;
        summary += ",mixed_share\n";

        for (double cap : spec.points()) {
            const Topology topo = base.with_group_capacity(spec.group, cap);
            const TypeLattice lattice = topo.make_lattice();
            for (const std::string& mode_str : spec.modes) {
                const OptimizeMode mode =
                    mode_str == "intra" ? OptimizeMode::intra : OptimizeMode::inter;
                const OptimizeResult res = optimize(topo, lattice, spsa, mode);
                const std::string tag = mode_str + "_c" + fmt_g(cap, 10);
                write_file(out_dir + "/delay_" + tag + ".csv", delay_report_csv(res.report));
                write_file(out_dir + "/alloc_" + tag + ".csv",
                           allocation_csv(topo, res.allocation));
                const double total = res.allocation.total_rate();
                const double share = total > 0.0 ? res.allocation.mixed_rate() / total : 0.0;
                summary += fmt_g(cap, 10) + "," + mode_str + "," + fmt_g(res.objective);
                for (const auto& pc : res.report.per_client) summary += "," + fmt_g(pc.seconds);
                summary += "," + fmt_g(share) + "\n";
                say(opt, spec.group + "=" + fmt_g(cap, 10) + " " + mode_str + ": " +
                             fmt_g(res.objective) + " s");
            }
        }
        write_file(out_dir + "/summary.csv", summary);
        auto fields = manifest_base(topo_path, opt, spsa.seed);
        fields.push_back({"group", spec.group});
        fields.push_back({"range", fmt_g(spec.start, 10) + ":" + fmt_g(spec.stop, 10) + ":" +
                                       fmt_g(spec.step, 10)});
        fields.push_back({"iterations", std::to_string(spsa.iterations)});
        fields.push_back({"restarts", std::to_string(spsa.restarts)});
        write_manifest(out_dir + "/sweep", "sweep", fields);
        return kOk;
    } catch (const IoError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kIoFailure;
    } catch (const OptimizeError& e) {
        std::fprintf(stderr, "optimization failed: %s\n", e.what());
        return kOptimizationFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sweep failed: %s\n", e.what());
        return kOptimizationFailure;
    }
}

}  // namespace ncmix::cli
