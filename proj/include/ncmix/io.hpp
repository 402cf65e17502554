#pragma once

// CSV schemas for allocations, analytic delay reports, optimizer traces and
// simulator reports. Headers are fixed; rows are emitted in deterministic
// order (link index, then ascending type index; clients by name).

#include <cmath>
#include <string>
#include <vector>

#include "ncmix/allocation.hpp"
#include "ncmix/csv.hpp"
#include "ncmix/delay.hpp"
#include "ncmix/lattice.hpp"
#include "ncmix/topology.hpp"

namespace ncmix {

inline std::string allocation_csv(const Topology& topo, const RateAllocation& a) {
    const auto names = topo.source_names();
    const Forwarding fw = derive_forwarding(topo, a);
    std::string out = "link_from,link_to,type,r_innovative,f_flow,w_probability\n";
    for (std::size_t l = 0; l < topo.links().size(); ++l) {
        const Link& link = topo.links()[l];
        for (std::size_t t = 0; t < a.types; ++t) {
            const double r = a.at(static_cast<int>(l), t);
            if (r <= 0.0 && fw.f[l][t] <= 0.0) continue;
            out += topo.nodes()[link.from].name;
            out += ',';
            out += topo.nodes()[link.to].name;
            out += ',';
            out += type_label(TypeLattice::mask_at(t), names);
            out += ',';
            out += fmt_exact(r);
            out += ',';
            out += fmt_exact(fw.f[l][t]);
            out += ',';
            out += fmt_exact(fw.w[l][t]);
            out += '\n';
        }
    }
    return out;
}

inline TypeMask parse_type_label(const std::string& label, const std::vector<std::string>& names) {
    TypeMask mask = 0;
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) return;
        for (std::size_t s = 0; s < names.size(); ++s) {
            if (names[s] == cur) {
                mask |= TypeMask{1} << s;
                cur.clear();
                return;
            }
        }
        throw IoError("unknown source in type label: " + cur);
    };
    for (char c : label) {
        if (c == '+') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    if (mask == 0) throw IoError("empty type label");
    return mask;
}

// Reads an allocation CSV back against a topology. Source links are pinned by
// the topology; a file row for one must agree with the pinned value.
inline RateAllocation read_allocation_csv(const std::string& path, const Topology& topo,
                                          const TypeLattice& lattice) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows[0].size() < 4 || rows[0][0] != "link_from")
        throw IoError(path + ": not an allocation CSV");
    RateAllocation a = make_allocation(topo, lattice);
    const auto names = topo.source_names();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 4) throw IoError(path + ": short row");
        const int from = topo.node_id(row[0]);
        const int to = topo.node_id(row[1]);
        const int link = topo.link_id(from, to);
        const TypeMask t = parse_type_label(row[2], names);
        if (!lattice.valid(t)) throw IoError(path + ": type outside lattice: " + row[2]);
        const double r = std::stod(row[3]);
        if (topo.nodes()[from].role == NodeRole::source) {
            const double pinned = a.at(link, TypeLattice::index_of(t));
            if (std::abs(pinned - r) > 1e-6 * std::max(1.0, pinned))
                throw IoError(path + ": source link " + row[0] + "->" + row[1] +
                              " rate is fixed by the topology");
            continue;
        }
        a.at(link, TypeLattice::index_of(t)) = r;
    }
    return a;
}

inline std::string delay_report_csv(const DelayReport& rep) {
    std::string out = "client,source,D_seconds\n";
    for (const auto& c : rep.per_client)
        out += c.client + "," + c.source + "," + fmt_g(c.seconds) + "\n";
    out += "__average__,," + fmt_g(rep.average) + "\n";
    return out;
}

struct TracePoint {
    int restart = 0;
    int iteration = 0;
    double objective = 0.0;
};

inline std::string trace_csv(const std::vector<TracePoint>& trace) {
    std::string out = "iteration,restart,objective\n";
    for (const auto& t : trace)
        out += std::to_string(t.iteration) + "," + std::to_string(t.restart) + "," +
               fmt_g(t.objective) + "\n";
    return out;
}

}  // namespace ncmix
