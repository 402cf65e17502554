#pragma once

// Per-link, per-type innovative rates r_ij^t, the feasibility conditions on
// them, the projection used to keep optimizer iterates evaluable, and the
// derived flow rates f_ij^t and forwarding probabilities w_ij^t.
//
// Feasibility conditions, each reported separately by check_feasible:
//   C1  r_ij^t >= 0
//   C2  sum_t r_ij^t <= c_ij (1 - pi_ij)
//   C3  r_ij^t = 0 when some source mixed into t has no component inflow at i
//   C4  per link and per (t, s in S_t): outgoing rate of the component types
//       T_{t,s} is bounded by their inflow at the sending node
//   C5  per non-source node and (t, s): component-type inflow is bounded by
//       the total innovative rate emitted by source s
//
// Source output links are not optimization variables: they carry the source's
// singleton type at min(emission rate, effective bandwidth).

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncmix/lattice.hpp"
#include "ncmix/topology.hpp"

namespace ncmix {

constexpr double kFeasTol = 1e-9;

struct RateAllocation {
    std::size_t types = 0;
    std::vector<std::vector<double>> r;  // [link][type index]

    RateAllocation() = default;
    RateAllocation(std::size_t links, std::size_t type_count)
        : types(type_count), r(links, std::vector<double>(type_count, 0.0)) {}

    double& at(int link, std::size_t type_idx) { return r[link][type_idx]; }
    double at(int link, std::size_t type_idx) const { return r[link][type_idx]; }

    double link_total(int link) const {
        double t = 0.0;
        for (double v : r[link]) t += v;
        return t;
    }

    double total_rate() const {
        double t = 0.0;
        for (const auto& row : r)
            for (double v : row) t += v;
        return t;
    }

    double mixed_rate() const {
        double t = 0.0;
        for (const auto& row : r)
            for (std::size_t i = 0; i < row.size(); ++i)
                if (!is_singleton(TypeLattice::mask_at(i))) t += row[i];
        return t;
    }
};

// Component-type index lists reused by feasibility, projection and the delay
// model: sets_for(t, s) lists the indices of T_{t,s}.
class TypeSets {
public:
    explicit TypeSets(const TypeLattice& lattice) : lattice_(&lattice) {
        const std::size_t n = lattice.type_count();
        const int S = lattice.source_count();
        sets_.assign(n * static_cast<std::size_t>(S), {});
        for (TypeMask t = 1; t <= lattice.full_mask(); ++t) {
            for (int s = 0; s < S; ++s) {
                if (!contains_source(t, s)) continue;
                auto& v = sets_[(t - 1) * S + s];
                for (TypeMask sub = t; sub != 0; sub = (sub - 1) & t)
                    if (contains_source(sub, s)) v.push_back(TypeLattice::index_of(sub));
            }
        }
    }

    const std::vector<std::size_t>& sets_for(TypeMask t, int s) const {
        return sets_[(t - 1) * static_cast<std::size_t>(lattice_->source_count()) + s];
    }

    const TypeLattice& lattice() const { return *lattice_; }

private:
    const TypeLattice* lattice_;
    std::vector<std::vector<std::size_t>> sets_;
};

// Fresh allocation with only the pinned source-link rates set.
inline RateAllocation make_allocation(const Topology& topo, const TypeLattice& lattice) {
    RateAllocation a(topo.links().size(), lattice.type_count());
    for (int b = 0; b < topo.source_count(); ++b) {
        const SourceInfo& si = topo.source_info(b);
        const TypeMask own = TypeMask{1} << b;
        for (int l : topo.out_links(si.node)) {
            const Link& link = topo.links()[l];
            a.at(l, TypeLattice::index_of(own)) =
                std::min(si.rate, link.effective_bandwidth());
        }
    }
    return a;
}

inline std::vector<double> inflow_by_type(const Topology& topo, const RateAllocation& a, int node) {
    std::vector<double> in(a.types, 0.0);
    for (int l : topo.in_links(node))
        for (std::size_t t = 0; t < a.types; ++t) in[t] += a.at(l, t);
    return in;
}

// Total innovative rate emitted by each source: R_s = sum_{l in D_s} r_sl.
inline std::vector<double> source_budgets(const Topology& topo, const RateAllocation& a) {
    std::vector<double> budget(topo.source_count(), 0.0);
    for (int b = 0; b < topo.source_count(); ++b) {
        const int node = topo.source_node_of_bit(b);
        for (int l : topo.out_links(node))
            for (std::size_t t = 0; t < a.types; ++t) budget[b] += a.at(l, t);
    }
    return budget;
}

enum class Constraint { C1, C2, C3, C4, C5 };

struct Violation {
    Constraint which;
    int link = -1;   // -1 for the node-level C5
    int node = -1;
    TypeMask type = 0;
    int source = -1;
    double amount = 0.0;

    std::string describe(const Topology& topo) const {
        static const char* names[] = {"C1", "C2", "C3", "C4", "C5"};
        std::string where = link >= 0 ? topo.nodes()[topo.links()[link].from].name + "->" +
                                            topo.nodes()[topo.links()[link].to].name
                                      : "node " + topo.nodes()[node].name;
        return std::string(names[static_cast<int>(which)]) + " at " + where +
               " exceeds by " + std::to_string(amount);
    }
};

inline std::vector<Violation> check_feasible(const Topology& topo, const TypeSets& sets,
                                             const RateAllocation& a, double tol = kFeasTol) {
    std::vector<Violation> out;
    const TypeLattice& lattice = sets.lattice();
    const auto budgets = source_budgets(topo, a);

    for (std::size_t l = 0; l < topo.links().size(); ++l) {
        const Link& link = topo.links()[l];
        double total = 0.0;
        for (std::size_t t = 0; t < a.types; ++t) {
            const double v = a.at(static_cast<int>(l), t);
            if (v < -tol)
                out.push_back({Constraint::C1, static_cast<int>(l), -1, TypeLattice::mask_at(t), -1, -v});
            total += v;
        }
        const double cap = link.effective_bandwidth();
        if (total > cap + tol)
            out.push_back({Constraint::C2, static_cast<int>(l), -1, 0, -1, total - cap});
    }

    for (int v : topo.topological_order()) {
        if (topo.nodes()[v].role == NodeRole::source) continue;
        const auto inflow = inflow_by_type(topo, a, v);

        // C5 at this node
        for (TypeMask t = 1; t <= lattice.full_mask(); ++t) {
            for (int s : lattice.sources_of(t)) {
                double in_group = 0.0;
                for (std::size_t ti : sets.sets_for(t, s)) in_group += inflow[ti];
                if (in_group > budgets[s] + tol)
                    out.push_back({Constraint::C5, -1, v, t, s, in_group - budgets[s]});
            }
        }

        for (int l : topo.out_links(v)) {
            for (TypeMask t = 1; t <= lattice.full_mask(); ++t) {
                const double rt = a.at(l, TypeLattice::index_of(t));
                bool component_missing = false;
                for (int s : lattice.sources_of(t)) {
                    double in_group = 0.0;
                    for (std::size_t ti : sets.sets_for(t, s)) in_group += inflow[ti];
                    if (in_group <= tol) component_missing = true;

                    double out_group = 0.0;
                    for (std::size_t ti : sets.sets_for(t, s)) out_group += a.at(l, ti);
                    if (out_group > in_group + tol)
                        out.push_back({Constraint::C4, l, -1, t, s, out_group - in_group});
                }
                if (component_missing && rt > tol)
                    out.push_back({Constraint::C3, l, -1, t, -1, rt});
            }
        }
    }
    return out;
}

// Projection of an arbitrary rate vector onto the feasible set: clip, pin
// source links, then sweep nodes in topological order scaling inflow groups
// down to the C5 budgets and outgoing links down to C2/C3/C4. Scaling only
// ever decreases rates, so upstream constraints stay satisfied.
inline RateAllocation project_feasible(const Topology& topo, const TypeSets& sets,
                                       const RateAllocation& raw) {
    const TypeLattice& lattice = sets.lattice();
    RateAllocation a = make_allocation(topo, lattice);
    for (std::size_t l = 0; l < topo.links().size(); ++l) {
        if (topo.nodes()[topo.links()[l].from].role == NodeRole::source) continue;  // pinned
        for (std::size_t t = 0; t < a.types; ++t)
            a.at(static_cast<int>(l), t) = std::max(0.0, raw.at(static_cast<int>(l), t));
    }
    const auto budgets = source_budgets(topo, a);

    for (int v : topo.topological_order()) {
        if (topo.nodes()[v].role == NodeRole::source) continue;

        // C5: proportional scaling of this node's inflow groups
        for (int pass = 0; pass < 64; ++pass) {
            bool changed = false;
            const auto inflow = inflow_by_type(topo, a, v);
            for (int s = 0; s < topo.source_count(); ++s) {
                double in_s = 0.0;
                for (std::size_t ti = 0; ti < a.types; ++ti)
                    if (contains_source(TypeLattice::mask_at(ti), s)) in_s += inflow[ti];
                if (in_s <= budgets[s] * (1.0 + 1e-12)) continue;
                const double f = budgets[s] / in_s;
                for (int l : topo.in_links(v)) {
                    if (topo.nodes()[topo.links()[l].from].role == NodeRole::source) continue;
                    for (std::size_t ti = 0; ti < a.types; ++ti)
                        if (contains_source(TypeLattice::mask_at(ti), s)) a.at(l, ti) *= f;
                }
                changed = true;
            }
            if (!changed) break;
        }

        const auto inflow = inflow_by_type(topo, a, v);
        std::vector<double> group_in(a.types * topo.source_count(), 0.0);
        for (TypeMask t = 1; t <= lattice.full_mask(); ++t)
            for (int s : lattice.sources_of(t)) {
                double g = 0.0;
                for (std::size_t ti : sets.sets_for(t, s)) g += inflow[ti];
                group_in[TypeLattice::index_of(t) * topo.source_count() + s] = g;
            }

        for (int l : topo.out_links(v)) {
            // C3: types with a missing component get no rate
            for (TypeMask t = 1; t <= lattice.full_mask(); ++t) {
                for (int s : lattice.sources_of(t)) {
                    if (group_in[TypeLattice::index_of(t) * topo.source_count() + s] <= kFeasTol) {
                        a.at(l, TypeLattice::index_of(t)) = 0.0;
                        break;
                    }
                }
            }
            // C2: proportional rescale to the effective bandwidth
            const double cap = topo.links()[l].effective_bandwidth();
            double total = a.link_total(l);
            if (total > cap * (1.0 + 1e-12) && total > 0.0) {
                const double f = cap / total;
                for (std::size_t t = 0; t < a.types; ++t) a.at(l, t) *= f;
            }
            // C4: scale overfull component groups until all fit
            for (int pass = 0; pass < 64; ++pass) {
                double worst = 1.0;
                for (TypeMask t = 1; t <= lattice.full_mask(); ++t) {
                    for (int s : lattice.sources_of(t)) {
                        const double g_in =
                            group_in[TypeLattice::index_of(t) * topo.source_count() + s];
                        double g_out = 0.0;
                        for (std::size_t ti : sets.sets_for(t, s)) g_out += a.at(l, ti);
                        if (g_out <= g_in * (1.0 + 1e-12) || g_out <= 0.0) continue;
                        const double f = g_in / g_out;
                        for (std::size_t ti : sets.sets_for(t, s)) a.at(l, ti) *= f;
                        worst = std::min(worst, f);
                    }
                }
                if (worst >= 1.0 - 1e-15) break;
            }
        }
    }
    return a;
}

// f_ij^t = (r_ij^t / sum_t r_ij^t) c_ij and w_ij^t = f_ij^t / c_ij. Source
// links emit their singleton type at the emission rate; the remainder of a
// slot distribution is the idle probability.
struct Forwarding {
    std::vector<std::vector<double>> w;  // [link][type index]
    std::vector<std::vector<double>> f;  // flow rates, same shape

    double idle(int link) const {
        double s = 0.0;
        for (double v : w[link]) s += v;
        return 1.0 - s;
    }
};

inline Forwarding derive_forwarding(const Topology& topo, const RateAllocation& a) {
    Forwarding fw;
    fw.w.assign(topo.links().size(), std::vector<double>(a.types, 0.0));
    fw.f.assign(topo.links().size(), std::vector<double>(a.types, 0.0));
    for (std::size_t l = 0; l < topo.links().size(); ++l) {
        const Link& link = topo.links()[l];
        if (topo.nodes()[link.from].role == NodeRole::source) {
            const int b = topo.source_bit(link.from);
            const double flow = std::min(topo.source_info(b).rate, link.capacity);
            const std::size_t ti = TypeLattice::index_of(TypeMask{1} << b);
            fw.f[l][ti] = flow;
            fw.w[l][ti] = flow / link.capacity;
            continue;
        }
        const double total = a.link_total(static_cast<int>(l));
        if (total <= 0.0) continue;
        for (std::size_t t = 0; t < a.types; ++t) {
            fw.f[l][t] = a.at(static_cast<int>(l), t) / total * link.capacity;
            fw.w[l][t] = fw.f[l][t] / link.capacity;
        }
    }
    return fw;
}

}  // namespace ncmix
