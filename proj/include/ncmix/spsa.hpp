#pragma once

// Constrained rate-allocation search. SPSA runs on the free variables (the
// per-type rates of every non-source link; intra mode frees only singleton
// types), with each iterate projected onto the feasible set for evaluation
// and a quadratic penalty on the pre-projection constraint violations so the
// raw iterates keep gradient information near active constraints.
//
// Gain schedules follow standard practice: a_k = a/(A+k+1)^alpha with
// alpha = 0.602, c_k = c/(k+1)^gamma with gamma = 0.101, Bernoulli +-1
// perturbations, two objective evaluations per iteration. `a` is tuned from a
// pilot gradient so the first step moves about 2% of the mean link capacity;
// `c` defaults to 1% of it. Independent restarts keep the best feasible
// allocation seen anywhere; near-ties prefer the smaller total mixed rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ncmix/allocation.hpp"
#include "ncmix/delay.hpp"
#include "ncmix/io.hpp"
#include "ncmix/rng.hpp"
#include "ncmix/topology.hpp"

namespace ncmix {

struct SpsaConfig {
    int iterations = 5000;
    int restarts = 8;
    double alpha = 0.602;
    double gamma = 0.101;
    double a = 0.0;               // 0 = tune from a pilot gradient
    double big_a = 0.0;           // 0 = 10% of the iteration budget
    double c = 0.0;               // 0 = 1% of mean link capacity
    double penalty_weight = 0.0;  // 0 = scaled from the initial objective
    uint64_t seed = 1;
    int threads = 0;              // 0 = hardware concurrency

    void validate() const {
        if (iterations < 1 || restarts < 1) throw std::invalid_argument("spsa: bad budget");
        if (!(alpha > 0.5 && alpha <= 1.0)) throw std::invalid_argument("spsa: alpha outside (0.5,1]");
        if (!(gamma > 1.0 / 6.0 && gamma <= 0.5))
            throw std::invalid_argument("spsa: gamma outside (1/6,1/2]");
        if (a < 0.0 || c < 0.0) throw std::invalid_argument("spsa: negative gain");
    }
};

enum class OptimizeMode { inter, intra };

struct OptimizeResult {
    RateAllocation allocation;
    DelayReport report;
    std::vector<TracePoint> trace;
    double objective = std::numeric_limits<double>::infinity();  // best average delay
};

class OptimizeError : public std::runtime_error {
public:
    OptimizeError(const std::string& w, std::string snapshot)
        : std::runtime_error(w), snapshot_(std::move(snapshot)) {}
    const std::string& snapshot() const { return snapshot_; }

private:
    std::string snapshot_;
};

namespace detail {

struct FreeVar {
    int link;
    std::size_t type_idx;
};

struct Candidate {
    double avg_delay = std::numeric_limits<double>::infinity();
    double mixed = std::numeric_limits<double>::infinity();
    RateAllocation alloc;

    // near-equal delays fall back to the simpler (less mixed) strategy
    bool better_than(const Candidate& o) const {
        if (!std::isfinite(o.avg_delay)) return std::isfinite(avg_delay);
        if (!std::isfinite(avg_delay)) return false;
        const double window = 5e-3 * std::min(avg_delay, o.avg_delay);
        if (std::abs(avg_delay - o.avg_delay) <= window) return mixed < o.mixed;
        return avg_delay < o.avg_delay;
    }
};

struct RestartOutput {
    Candidate best;
    std::vector<TracePoint> trace;
};

inline double violation_norm_sq(const std::vector<Violation>& v) {
    double s = 0.0;
    for (const auto& viol : v) s += viol.amount * viol.amount;
    return s;
}

class Objective {
public:
    Objective(const Topology& topo, const TypeSets& sets, const std::vector<FreeVar>& vars,
              double penalty)
        : topo_(topo), sets_(sets), vars_(vars), penalty_(penalty),
          base_(make_allocation(topo, sets.lattice())) {}

    // penalized objective; also reports the projected allocation's true delay
    double eval(const std::vector<double>& theta, Candidate* out) const {
        RateAllocation raw = base_;
        for (std::size_t i = 0; i < vars_.size(); ++i)
            raw.at(vars_[i].link, vars_[i].type_idx) = theta[i];
        const double viol = violation_norm_sq(check_feasible(topo_, sets_, raw));
        RateAllocation proj = project_feasible(topo_, sets_, raw);
        double avg;
        try {
            avg = average_delay(topo_, proj).average;
        } catch (const UnreachableSourceError&) {
            avg = std::numeric_limits<double>::infinity();
        }
        if (out) {
            out->avg_delay = avg;
            out->mixed = proj.mixed_rate();
            out->alloc = std::move(proj);
        }
        if (!std::isfinite(avg)) return 1e9 * (1.0 + viol);
        return avg + penalty_ * viol;
    }

private:
    const Topology& topo_;
    const TypeSets& sets_;
    const std::vector<FreeVar>& vars_;
    double penalty_;
    RateAllocation base_;
};

}  // namespace detail

inline OptimizeResult optimize(const Topology& topo, const TypeLattice& lattice,
                               const SpsaConfig& cfg_in, OptimizeMode mode) {
    SpsaConfig cfg = cfg_in;
    cfg.validate();
    const TypeSets sets(lattice);

    std::vector<detail::FreeVar> vars;
    std::vector<double> var_cap;
    for (std::size_t l = 0; l < topo.links().size(); ++l) {
        if (topo.nodes()[topo.links()[l].from].role == NodeRole::source) continue;
        for (std::size_t t = 0; t < lattice.type_count(); ++t) {
            if (mode == OptimizeMode::intra && !is_singleton(TypeLattice::mask_at(t))) continue;
            vars.push_back({static_cast<int>(l), t});
            var_cap.push_back(topo.links()[l].effective_bandwidth());
        }
    }
    if (vars.empty()) throw OptimizeError("nothing to optimize: no non-source links", "");

    double mean_cap = 0.0;
    for (double c : var_cap) mean_cap += c;
    mean_cap /= static_cast<double>(var_cap.size());

    const double big_a = cfg.big_a > 0.0 ? cfg.big_a : 0.1 * cfg.iterations;
    const double c_gain = cfg.c > 0.0 ? cfg.c : 0.01 * mean_cap;

    auto run_restart = [&](int restart) -> detail::RestartOutput {
        std::mt19937_64 rng = make_rng(cfg.seed, static_cast<uint64_t>(restart));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<double> theta(vars.size());
        for (std::size_t i = 0; i < vars.size(); ++i) theta[i] = unit(rng) * var_cap[i];

        // penalty scale: violations are rate-sized, delays are second-sized
        detail::Candidate init;
        double penalty = cfg.penalty_weight;
        {
            detail::Objective probe(topo, sets, vars, 0.0);
            probe.eval(theta, &init);
            if (penalty <= 0.0) {
                const double d0 = std::isfinite(init.avg_delay) ? init.avg_delay : 1.0;
                penalty = 50.0 * d0 / (mean_cap * mean_cap);
            }
        }
        detail::Objective obj(topo, sets, vars, penalty);

        detail::RestartOutput out;
        out.best = init;
        out.trace.reserve(cfg.iterations);

        std::vector<double> delta(vars.size());
        std::vector<double> plus(vars.size()), minus(vars.size());

        // pilot gradient magnitude fixes the a gain
        double a_gain = cfg.a;
        if (a_gain <= 0.0) {
            double gmag = 0.0;
            int samples = 0;
            for (int p = 0; p < 3; ++p) {
                for (std::size_t i = 0; i < vars.size(); ++i)
                    delta[i] = unit(rng) < 0.5 ? -1.0 : 1.0;
                for (std::size_t i = 0; i < vars.size(); ++i) {
                    plus[i] = theta[i] + c_gain * delta[i];
                    minus[i] = theta[i] - c_gain * delta[i];
                }
                const double yp = obj.eval(plus, nullptr);
                const double ym = obj.eval(minus, nullptr);
                if (std::isfinite(yp) && std::isfinite(ym)) {
                    gmag += std::abs(yp - ym) / (2.0 * c_gain);
                    ++samples;
                }
            }
            gmag = samples > 0 ? gmag / samples : 0.0;
            a_gain = gmag > 1e-12 ? 0.02 * mean_cap * std::pow(big_a + 1.0, cfg.alpha) / gmag
                                  : 0.1 * mean_cap;
        }

        for (int k = 0; k < cfg.iterations; ++k) {
            const double ck = c_gain / std::pow(k + 1.0, cfg.gamma);
            const double ak = a_gain / std::pow(big_a + k + 1.0, cfg.alpha);
            for (std::size_t i = 0; i < vars.size(); ++i)
                delta[i] = unit(rng) < 0.5 ? -1.0 : 1.0;
            for (std::size_t i = 0; i < vars.size(); ++i) {
                plus[i] = theta[i] + ck * delta[i];
                minus[i] = theta[i] - ck * delta[i];
            }
            detail::Candidate cand_p, cand_m;
            const double yp = obj.eval(plus, &cand_p);
            const double ym = obj.eval(minus, &cand_m);
            if (cand_p.better_than(out.best)) out.best = std::move(cand_p);
            if (cand_m.better_than(out.best)) out.best = std::move(cand_m);

            const double slope = (yp - ym) / (2.0 * ck);
            for (std::size_t i = 0; i < vars.size(); ++i) {
                theta[i] -= ak * slope * delta[i];
                // keep the raw iterate in a sane box; the penalty does the rest
                theta[i] = std::clamp(theta[i], -0.5 * var_cap[i], 2.0 * var_cap[i]);
            }
            out.trace.push_back({restart, k, 0.5 * (yp + ym)});
        }

        detail::Candidate final_cand;
        obj.eval(theta, &final_cand);
        if (final_cand.better_than(out.best)) out.best = std::move(final_cand);
        return out;
    };

    const int hw = cfg.threads > 0 ? cfg.threads
                                   : std::max(1u, std::thread::hardware_concurrency());
    std::vector<detail::RestartOutput> outputs(cfg.restarts);
    for (int base = 0; base < cfg.restarts; base += hw) {
        const int batch = std::min(hw, cfg.restarts - base);
        std::vector<std::future<detail::RestartOutput>> futs;
        for (int i = 1; i < batch; ++i)
            futs.push_back(std::async(std::launch::async, run_restart, base + i));
        outputs[base] = run_restart(base);
        for (int i = 1; i < batch; ++i) outputs[base + i] = futs[i - 1].get();
    }

    OptimizeResult res;
    detail::Candidate best;
    for (auto& o : outputs) {
        if (o.best.better_than(best)) best = std::move(o.best);
        res.trace.insert(res.trace.end(), o.trace.begin(), o.trace.end());
    }
    if (!std::isfinite(best.avg_delay)) {
        std::string snapshot = "restarts=" + std::to_string(cfg.restarts) +
                               " iterations=" + std::to_string(cfg.iterations);
        throw OptimizeError("no evaluable allocation found (unreachable source?)", snapshot);
    }
    res.allocation = std::move(best.alloc);
    res.report = average_delay(topo, res.allocation);
    res.objective = res.report.average;
    return res;
}

}  // namespace ncmix
