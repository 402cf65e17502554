#pragma once

// Analytic expected-decoding-delay model.
//
// A client's useful packets are counted per type. A count vector x is
// generically independent (every packet innovative) exactly when for every
// source subset D the packets of types within D number at most sum_{s in D}
// N_s; decoding of a target source is possible when some sub-vector of x
// exactly covers a source set containing the target with a generically
// full-rank system. Useful arrivals of type t occur with the constant
// per-slot probability p_c^t; an arrival whose type is already saturated
// cannot increase rank and counts as a useless slot.
//
// The decode time is therefore an absorption time of a finite monotone chain
// on the independent count vectors. expected_slots_closed() evaluates its
// mean exactly via visit moments accumulated over the decode frontier; the
// truncated mode sums k P(k) directly and reports the tail mass. With a
// single packet type the closed form collapses to N/p, the negative-binomial
// mean.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ncmix/allocation.hpp"
#include "ncmix/lattice.hpp"
#include "ncmix/topology.hpp"

namespace ncmix {

class UnreachableSourceError : public std::runtime_error {
public:
    explicit UnreachableSourceError(const std::string& w) : std::runtime_error(w) {}
};

class DelayEvalError : public std::runtime_error {
public:
    explicit DelayEvalError(const std::string& w) : std::runtime_error(w) {}
};

struct UsefulRates {
    std::vector<double> p;       // by type index, size 2^S - 1
    double slot_seconds = 1.0;   // d_c

    double total() const {
        double t = 0.0;
        for (double v : p) t += v;
        return t;
    }
};

// Eq.-style useful-packet probabilities: p_c^t = (sum of innovative inflow of
// type t) / (total incoming capacity).
inline UsefulRates useful_rates(const Topology& topo, const RateAllocation& a, int client) {
    UsefulRates u;
    u.p.assign(a.types, 0.0);
    double cap = 0.0;
    for (int l : topo.in_links(client)) {
        cap += topo.links()[l].capacity;
        for (std::size_t t = 0; t < a.types; ++t) u.p[t] += a.at(l, t);
    }
    if (cap <= 0.0) throw TopologyError("client has zero incoming capacity");
    for (auto& v : u.p) v /= cap;
    u.slot_seconds = 1.0 / cap;
    return u;
}

namespace detail {

// sums[M] = number of counted packets whose type mixes only sources in M.
// Decoding via cover set C holds iff for every D subset of C the packets
// outside D still cover the remaining N(C) - N(D) degrees of freedom.
inline bool decodable_via_cover(const std::vector<int64_t>& sums, TypeMask cover,
                                const std::vector<int>& n_of_mask) {
    for (TypeMask d = cover;; d = (d - 1) & cover) {
        if (sums[cover] - sums[d] < n_of_mask[cover] - n_of_mask[d]) return false;
        if (d == 0) break;
    }
    return true;
}

inline bool decodable_from_sums(const std::vector<int64_t>& sums, int target,
                                const std::vector<int>& n_of_mask, TypeMask full) {
    const TypeMask bit = TypeMask{1} << target;
    for (TypeMask c = full; c != 0; c = (c - 1) & full) {
        if (!(c & bit)) continue;
        if (decodable_via_cover(sums, c, n_of_mask)) return true;
    }
    return false;
}

inline std::vector<int> n_of_mask_table(const std::vector<int>& sizes) {
    const int S = static_cast<int>(sizes.size());
    std::vector<int> n(1 << S, 0);
    for (TypeMask m = 1; m < (TypeMask{1} << S); ++m) {
        for (int s = 0; s < S; ++s)
            if (contains_source(m, s)) n[m] += sizes[s];
    }
    return n;
}

}  // namespace detail

// Count-level decodability of `target` from useful-packet counts per type.
inline bool decodable(const std::map<TypeMask, int>& counts, int target,
                      const std::vector<int>& sizes) {
    const int S = static_cast<int>(sizes.size());
    const TypeMask full = (TypeMask{1} << S) - 1;
    const auto n_of_mask = detail::n_of_mask_table(sizes);
    std::vector<int64_t> sums(1 << S, 0);
    for (const auto& [t, k] : counts) {
        if (t == 0 || t > full) throw std::invalid_argument("decodable: type outside lattice");
        if (k < 0) throw std::invalid_argument("decodable: negative count");
        for (TypeMask m = 1; m <= full; ++m)
            if ((t & m) == t) sums[m] += k;
    }
    return detail::decodable_from_sums(sums, target, n_of_mask, full);
}

namespace detail {

// State lattice of a decode chain: all generically-independent count vectors
// over the relevant types, each with its successor table and decode flag.
// Shape depends only on (types, sizes, target), not on the probabilities, so
// instances are cached and shared.
struct ChainStructure {
    std::vector<TypeMask> types;      // relevant types, ascending mask
    std::vector<int> caps;            // per-type solo cap N(S_t)
    std::size_t n_states = 0;
    std::size_t start = 0;            // id of the all-zero state
    std::vector<int32_t> succ;        // [state * T + t] -> id, or -1 when blocked
    std::vector<uint8_t> dec;         // decode flag per state
    std::size_t transient = 0;
};

constexpr std::size_t kMaxChainStates = 6'000'000;

inline std::shared_ptr<const ChainStructure> build_chain_structure(
    const std::vector<TypeMask>& types, const std::vector<int>& sizes, int target) {
    const int S = static_cast<int>(sizes.size());
    const TypeMask full = (TypeMask{1} << S) - 1;
    const auto n_of_mask = n_of_mask_table(sizes);
    const int T = static_cast<int>(types.size());

    auto st = std::make_shared<ChainStructure>();
    st->types = types;
    st->caps.resize(T);
    std::vector<uint64_t> stride(T, 1);
    uint64_t key_span = 1;
    for (int i = 0; i < T; ++i) {
        st->caps[i] = n_of_mask[types[i]];
        stride[i] = key_span;
        key_span *= static_cast<uint64_t>(st->caps[i]) + 1;
    }

    struct Rec {
        uint64_t key;
        int32_t total;
        uint8_t dec;
    };
    std::vector<Rec> recs;
    std::vector<int> x(T, 0);
    std::vector<int64_t> sums(1 << S, 0);

    // depth-first enumeration with running source-subset sums and pruning
    auto independent_ok = [&](int type_i) {
        for (TypeMask m = 1; m <= full; ++m) {
            if ((types[type_i] & m) != types[type_i]) continue;
            if (sums[m] + 1 > n_of_mask[m]) return false;
        }
        return true;
    };
    auto add_one = [&](int type_i, int delta) {
        for (TypeMask m = 1; m <= full; ++m)
            if ((types[type_i] & m) == types[type_i]) sums[m] += delta;
    };

    auto record = [&]() {
        uint64_t key = 0;
        int total = 0;
        for (int i = 0; i < T; ++i) {
            key += stride[i] * static_cast<uint64_t>(x[i]);
            total += x[i];
        }
        recs.push_back({key, total,
                        static_cast<uint8_t>(
                            decodable_from_sums(sums, target, n_of_mask, full) ? 1 : 0)});
        if (recs.size() > kMaxChainStates)
            throw DelayEvalError("decode chain exceeds the state budget");
    };
    auto rec = [&](auto&& self, int level) -> void {
        if (level == T) {
            record();
            return;
        }
        self(self, level + 1);
        int added = 0;
        while (independent_ok(level)) {
            add_one(level, +1);
            ++x[level];
            ++added;
            self(self, level + 1);
        }
        add_one(level, -added);
        x[level] = 0;
    };
    rec(rec, 0);

    std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
        return a.total != b.total ? a.total < b.total : a.key < b.key;
    });

    st->n_states = recs.size();
    std::unordered_map<uint64_t, int32_t> id_of;
    id_of.reserve(recs.size() * 2);
    for (std::size_t i = 0; i < recs.size(); ++i) id_of[recs[i].key] = static_cast<int32_t>(i);
    st->start = id_of.at(0);
    st->dec.resize(recs.size());
    st->succ.assign(recs.size() * T, -1);
    std::size_t transient = 0;
    // decode state successor entries are never used; leave them blocked
    for (std::size_t i = 0; i < recs.size(); ++i) {
        st->dec[i] = recs[i].dec;
        if (!recs[i].dec) ++transient;
        for (int t = 0; t < T; ++t) {
            auto it = id_of.find(recs[i].key + stride[t]);
            if (it == id_of.end()) continue;
            // stride collision check: adding e_t must not overflow the digit
            uint64_t digit = (recs[i].key / stride[t]) % (static_cast<uint64_t>(st->caps[t]) + 1);
            if (digit >= static_cast<uint64_t>(st->caps[t])) continue;
            st->succ[i * T + t] = it->second;
        }
    }
    st->transient = transient;
    return st;
}

inline std::shared_ptr<const ChainStructure> chain_structure_cached(
    const std::vector<TypeMask>& types, const std::vector<int>& sizes, int target) {
    thread_local std::unordered_map<std::string, std::shared_ptr<const ChainStructure>> cache;
    std::string key;
    key.reserve(types.size() * 4 + sizes.size() * 4 + 4);
    for (TypeMask t : types) key.append(reinterpret_cast<const char*>(&t), sizeof(t));
    key.push_back('|');
    for (int n : sizes) key.append(reinterpret_cast<const char*>(&n), sizeof(n));
    key.push_back('|');
    key.append(reinterpret_cast<const char*>(&target), sizeof(target));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto st = build_chain_structure(types, sizes, target);
    if (cache.size() > 256) cache.clear();
    cache[key] = st;
    return st;
}

}  // namespace detail

// The per-client decode process for one target source.
class DecodeChain {
public:
    static constexpr double kActiveEps = 1e-12;

    DecodeChain(const UsefulRates& rates, int target, const std::vector<int>& sizes)
        : target_(target), sizes_(sizes) {
        const int S = static_cast<int>(sizes.size());
        if (target < 0 || target >= S) throw std::invalid_argument("DecodeChain: bad target");
        const TypeMask full = (TypeMask{1} << S) - 1;
        if (rates.p.size() != static_cast<std::size_t>(full))
            throw std::invalid_argument("DecodeChain: rates sized for a different lattice");
        double ptot = 0.0;
        for (double v : rates.p) {
            if (v < -1e-12) throw std::invalid_argument("DecodeChain: negative probability");
            ptot += v;
        }
        if (ptot > 1.0 + 1e-9) throw std::invalid_argument("DecodeChain: probabilities exceed 1");

        const auto n_of_mask = detail::n_of_mask_table(sizes);

        // achievable cover sets given the positive-probability types
        std::vector<int64_t> cap_sums(1 << S, 0);
        for (TypeMask t = 1; t <= full; ++t) {
            if (rates.p[TypeLattice::index_of(t)] <= kActiveEps) continue;
            for (TypeMask m = 1; m <= full; ++m)
                if ((t & m) == t) cap_sums[m] += n_of_mask[t];
        }
        std::vector<TypeMask> achievable;
        for (TypeMask c = 1; c <= full; ++c) {
            if (!contains_source(c, target)) continue;
            if (detail::decodable_via_cover(cap_sums, c, n_of_mask)) achievable.push_back(c);
        }
        if (achievable.empty()) {
            reachable_ = false;
            return;
        }

        // relevant types: members of some achievable cover set
        std::vector<TypeMask> types;
        for (TypeMask t = 1; t <= full; ++t) {
            if (rates.p[TypeLattice::index_of(t)] <= kActiveEps) continue;
            for (TypeMask c : achievable) {
                if ((t & c) == t) {
                    types.push_back(t);
                    break;
                }
            }
        }
        structure_ = detail::chain_structure_cached(types, sizes, target);
        p_.resize(types.size());
        for (std::size_t i = 0; i < types.size(); ++i)
            p_[i] = rates.p[TypeLattice::index_of(types[i])];
        reachable_ = true;
    }

    bool reachable() const { return reachable_; }
    int target() const { return target_; }
    int min_packets() const { return sizes_[target_]; }

    // Exact E[number of slots until decode].
    double expected_slots_closed() const {
        require_reachable();
        const auto& st = *structure_;
        const int T = static_cast<int>(st.types.size());
        std::vector<double> m0(st.n_states, 0.0), m1(st.n_states, 0.0);
        std::vector<double> acc0(st.n_states, 0.0), acc1(st.n_states, 0.0);
        double expect = 0.0;
        double mass = 0.0;
        for (std::size_t i = 0; i < st.n_states; ++i) {
            if (st.dec[i]) continue;
            double q = 0.0;
            for (int t = 0; t < T; ++t)
                if (st.succ[i * T + t] >= 0) q += p_[t];
            double inflow0 = acc0[i] + (i == st.start ? 1.0 : 0.0);
            if (inflow0 <= 0.0) continue;
            if (q <= 0.0) throw DelayEvalError("decode chain stalls in a dead state");
            m0[i] = inflow0 / q;
            m1[i] = ((1.0 - q) * m0[i] + acc1[i]) / q;
            for (int t = 0; t < T; ++t) {
                const int32_t j = st.succ[i * T + t];
                if (j < 0) continue;
                if (st.dec[j]) {
                    expect += p_[t] * (m1[i] + m0[i]);
                    mass += p_[t] * m0[i];
                } else {
                    acc0[j] += p_[t] * m0[i];
                    acc1[j] += p_[t] * (m1[i] + m0[i]);
                }
            }
        }
        if (mass < 1.0 - 1e-6) throw DelayEvalError("decode chain loses probability mass");
        return expect;
    }

    // P(decode with exactly k slots). Zero below the trivial packet bound.
    double prob_exact_k(int k) const {
        require_reachable();
        if (k < min_packets()) return 0.0;
        ForwardState f = forward_start();
        double last = 0.0;
        for (int i = 0; i < k; ++i) last = forward_step(f);
        return last;
    }

    struct TruncatedExpectation {
        double slots = 0.0;
        double tail = 0.0;   // 1 - accumulated probability mass
        int k_used = 0;
    };

    // Direct sum of k P(k) up to the smallest k with tail below `tail_target`
    // (capped); reports the remaining mass.
    TruncatedExpectation expected_slots_truncated(double tail_target = 1e-8,
                                                  int k_cap = 0) const {
        require_reachable();
        int total_symbols = 0;
        for (int n : sizes_) total_symbols += n;
        if (k_cap <= 0) k_cap = 50 * total_symbols;
        ForwardState f = forward_start();
        TruncatedExpectation out;
        double cum = 0.0;
        for (int k = 1; k <= k_cap; ++k) {
            const double pk = forward_step(f);
            cum += pk;
            out.slots += static_cast<double>(k) * pk;
            out.k_used = k;
            if (1.0 - cum < tail_target) break;
        }
        out.tail = 1.0 - cum;
        return out;
    }

private:
    struct ForwardState {
        std::vector<double> prob;  // over states, transient mass only
    };

    ForwardState forward_start() const {
        ForwardState f;
        f.prob.assign(structure_->n_states, 0.0);
        f.prob[structure_->start] = 1.0;
        return f;
    }

    // One slot of the forward recursion; returns P(decode at this slot).
    double forward_step(ForwardState& f) const {
        const auto& st = *structure_;
        const int T = static_cast<int>(st.types.size());
        std::vector<double> next(st.n_states, 0.0);
        double decoded = 0.0;
        for (std::size_t i = 0; i < st.n_states; ++i) {
            const double pi = f.prob[i];
            if (pi <= 0.0 || st.dec[i]) continue;
            double q = 0.0;
            for (int t = 0; t < T; ++t) {
                const int32_t j = st.succ[i * T + t];
                if (j < 0) continue;
                q += p_[t];
                if (st.dec[j])
                    decoded += pi * p_[t];
                else
                    next[j] += pi * p_[t];
            }
            next[i] += pi * (1.0 - q);
        }
        f.prob.swap(next);
        return decoded;
    }

    void require_reachable() const {
        if (!reachable_)
            throw UnreachableSourceError("target source cannot be decoded from the offered types");
    }

    int target_;
    std::vector<int> sizes_;
    bool reachable_ = false;
    std::shared_ptr<const detail::ChainStructure> structure_;
    std::vector<double> p_;  // per relevant type
};

enum class DelayMode { closed_form, truncated_sum };

struct DelayValue {
    double seconds = 0.0;
    double tail = 0.0;  // only meaningful for truncated_sum
};

inline DelayValue expected_delay(const UsefulRates& rates, int target,
                                 const std::vector<int>& sizes,
                                 DelayMode mode = DelayMode::closed_form) {
    DecodeChain chain(rates, target, sizes);
    if (mode == DelayMode::closed_form)
        return {rates.slot_seconds * chain.expected_slots_closed(), 0.0};
    auto t = chain.expected_slots_truncated();
    return {rates.slot_seconds * t.slots, t.tail};
}

struct ClientDelay {
    std::string client;
    std::string source;
    double seconds = 0.0;
};

struct DelayReport {
    std::vector<ClientDelay> per_client;  // sorted by client name
    double average = 0.0;
};

inline DelayReport average_delay(const Topology& topo, const RateAllocation& alloc) {
    std::vector<int> sizes(topo.source_count());
    for (int b = 0; b < topo.source_count(); ++b) sizes[b] = topo.source_info(b).symbols;

    std::vector<int> clients = topo.clients();
    std::sort(clients.begin(), clients.end(), [&](int a, int b) {
        return topo.nodes()[a].name < topo.nodes()[b].name;
    });

    DelayReport rep;
    double sum = 0.0;
    for (int c : clients) {
        const int target = topo.subscription(c);
        const UsefulRates rates = useful_rates(topo, alloc, c);
        const DelayValue v = expected_delay(rates, target, sizes, DelayMode::closed_form);
        rep.per_client.push_back(
            {topo.nodes()[c].name, topo.nodes()[topo.source_node_of_bit(target)].name, v.seconds});
        sum += v.seconds;
    }
    rep.average = sum / static_cast<double>(rep.per_client.size());
    return rep;
}

}  // namespace ncmix
