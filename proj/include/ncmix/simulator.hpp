#pragma once

// Seeded discrete-event simulation of the push-based coding system. Each link
// fires transmission opportunities at its capacity with a random phase; on an
// opportunity the sending node samples the link's forwarding distribution,
// recodes a packet of the drawn type from its buffer (falling back to the
// producible types when the drawn one is not), the packet survives the link
// loss with probability 1 - pi, and the receiver keeps it only if it is
// innovative. Clients record the instant their subscribed source first
// decodes; the decode is cross-checked with independent rank assertions and
// against the original payload symbols.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <future>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ncmix/allocation.hpp"
#include "ncmix/csv.hpp"
#include "ncmix/gf.hpp"
#include "ncmix/lattice.hpp"
#include "ncmix/matrix.hpp"
#include "ncmix/rng.hpp"
#include "ncmix/topology.hpp"

namespace ncmix {

struct SimConfig {
    uint64_t seed = 1;
    int replications = 1;
    double max_time = 0.0;  // replication budget in seconds; must be positive
    int threads = 0;        // 0 = hardware concurrency
};

struct CodedPacket {
    std::vector<uint8_t> coeffs;  // concatenated per-source blocks
    uint8_t payload = 0;
    TypeMask type = 0;
};

// Block layout of the concatenated coefficient vector.
struct BlockLayout {
    std::vector<int> begin;  // per source bit
    std::vector<int> len;
    int cols = 0;

    explicit BlockLayout(const Topology& topo) {
        for (int b = 0; b < topo.source_count(); ++b) {
            begin.push_back(cols);
            len.push_back(topo.source_info(b).symbols);
            cols += topo.source_info(b).symbols;
        }
    }

    TypeMask type_of(const std::vector<uint8_t>& coeffs) const {
        TypeMask t = 0;
        for (std::size_t b = 0; b < begin.size(); ++b) {
            for (int k = 0; k < len[b]; ++k) {
                if (coeffs[begin[b] + k] != 0) {
                    t |= TypeMask{1} << b;
                    break;
                }
            }
        }
        return t;
    }
};

// Buffer of innovative packets plus a maintained reduced system for O(n^2)
// innovation checks and decode tracking.
class NodeBuffer {
public:
    NodeBuffer(const BlockLayout& layout, const GaloisField& gf)
        : layout_(&layout), gf_(&gf), reduced_(0, layout.cols) {}

    const std::vector<CodedPacket>& packets() const { return packets_; }
    std::size_t rank() const { return reduced_.rows(); }
    TypeMask present_types() const { return present_; }

    bool innovative(const CodedPacket& p) const {
        std::vector<uint8_t> row = p.coeffs;
        uint8_t rhs = p.payload;
        reduce_row(row, rhs);
        return !all_zero(row);
    }

    // Stores the packet if innovative; returns whether it was.
    bool add(const CodedPacket& p) {
        std::vector<uint8_t> row = p.coeffs;
        uint8_t rhs = p.payload;
        reduce_row(row, rhs);
        std::size_t lead = 0;
        while (lead < row.size() && row[lead] == 0) ++lead;
        if (lead == row.size()) return false;
        const uint8_t inv = gf_->inv(row[lead]);
        for (auto& v : row) v = gf_->mul(v, inv);
        rhs = gf_->mul(rhs, inv);
        // back-substitute into existing rows to keep the system reduced
        for (std::size_t r = 0; r < reduced_.rows(); ++r) {
            const uint8_t f = reduced_.at(r, lead);
            if (f == 0) continue;
            for (std::size_t c = 0; c < row.size(); ++c)
                reduced_.at(r, c) = GaloisField::add(reduced_.at(r, c), gf_->mul(f, row[c]));
            rhs_[r] = GaloisField::add(rhs_[r], gf_->mul(f, rhs));
        }
        reduced_.append_row(row);
        rhs_.push_back(rhs);
        pivots_.push_back(lead);
        packets_.push_back(p);
        present_ |= p.type;
        return true;
    }

    // A source block is decoded when each of its columns is a determined
    // variable of the reduced system.
    bool block_decoded(int source_bit) const {
        const int b0 = layout_->begin[source_bit];
        const int bl = layout_->len[source_bit];
        for (int j = b0; j < b0 + bl; ++j) {
            bool det = false;
            for (std::size_t r = 0; r < reduced_.rows(); ++r) {
                if (reduced_.at(r, j) == 0) continue;
                if (static_cast<int>(pivots_[r]) != j) return false;
                bool clean = true;
                for (std::size_t c = 0; c < reduced_.cols(); ++c) {
                    if (static_cast<int>(c) != j && reduced_.at(r, c) != 0) {
                        clean = false;
                        break;
                    }
                }
                if (!clean) return false;
                det = true;
            }
            if (!det) return false;
        }
        return true;
    }

    std::vector<uint8_t> decoded_block(int source_bit) const {
        const int b0 = layout_->begin[source_bit];
        const int bl = layout_->len[source_bit];
        std::vector<uint8_t> out(bl, 0);
        for (int j = b0; j < b0 + bl; ++j) {
            for (std::size_t r = 0; r < reduced_.rows(); ++r) {
                if (static_cast<int>(pivots_[r]) == j) out[j - b0] = rhs_[r];
            }
        }
        return out;
    }

    CoeffMatrix raw_matrix() const {
        CoeffMatrix m(packets_.size(), layout_->cols);
        for (std::size_t r = 0; r < packets_.size(); ++r)
            for (int c = 0; c < layout_->cols; ++c) m.at(r, c) = packets_[r].coeffs[c];
        return m;
    }

    std::vector<uint8_t> raw_rhs() const {
        std::vector<uint8_t> out;
        for (const auto& p : packets_) out.push_back(p.payload);
        return out;
    }

private:
    void reduce_row(std::vector<uint8_t>& row, uint8_t& rhs) const {
        for (std::size_t r = 0; r < reduced_.rows(); ++r) {
            const uint8_t f = row[pivots_[r]];
            if (f == 0) continue;
            for (std::size_t c = 0; c < row.size(); ++c)
                row[c] = GaloisField::add(row[c], gf_->mul(f, reduced_.at(r, c)));
            rhs = GaloisField::add(rhs, gf_->mul(f, rhs_[r]));
        }
    }

    static bool all_zero(const std::vector<uint8_t>& v) {
        for (uint8_t x : v)
            if (x != 0) return false;
        return true;
    }

    const BlockLayout* layout_;
    const GaloisField* gf_;
    std::vector<CodedPacket> packets_;
    CoeffMatrix reduced_;
    std::vector<uint8_t> rhs_;
    std::vector<std::size_t> pivots_;
    TypeMask present_ = 0;
};

inline bool innovation_check(const NodeBuffer& buffer, const CodedPacket& p) {
    return buffer.innovative(p);
}

// Uniform-random combination of the buffered packets whose types are subsets
// of `requested`. Unavailable when some requested source has no
// representation among those packets.
inline std::optional<CodedPacket> recode(const NodeBuffer& buffer, TypeMask requested,
                                         const BlockLayout& layout, const GaloisField& gf,
                                         std::mt19937_64& rng) {
    std::vector<const CodedPacket*> cand;
    TypeMask covered = 0;
    for (const auto& p : buffer.packets()) {
        if ((p.type & requested) == p.type) {
            cand.push_back(&p);
            covered |= p.type;
        }
    }
    if ((covered & requested) != requested) return std::nullopt;

    std::uniform_int_distribution<int> coeff(0, gf.size() - 1);
    CodedPacket out;
    for (int attempt = 0; attempt < 16; ++attempt) {
        out.coeffs.assign(layout.cols, 0);
        out.payload = 0;
        for (const CodedPacket* p : cand) {
            const uint8_t a = static_cast<uint8_t>(coeff(rng));
            if (a == 0) continue;
            for (int c = 0; c < layout.cols; ++c)
                out.coeffs[c] = GaloisField::add(out.coeffs[c], gf.mul(a, p->coeffs[c]));
            out.payload = GaloisField::add(out.payload, gf.mul(a, p->payload));
        }
        out.type = layout.type_of(out.coeffs);
        if (out.type == requested) return out;
    }
    // vanishing-probability degenerate draw; ship it with its actual type
    if (out.type == 0) return std::nullopt;
    return out;
}

struct ClientStats {
    std::string client;
    std::string source;
    double mean_delay = 0.0;
    double ci95_halfwidth = 0.0;
    int censored = 0;
    int replications = 0;
    // aggregate innovative arrivals by type and observed client-slot count,
    // for comparing against the analytic useful-packet probabilities
    std::vector<double> type_fraction;  // by type index
};

struct SimReport {
    std::vector<ClientStats> clients;  // sorted by client name
    uint64_t event_hash = 0;           // over all replications, order-sensitive
    long long transmissions = 0;
    long long losses = 0;
    long long non_innovative = 0;

    std::string csv() const {
        std::string out = "client,source,mean_delay_s,ci95_halfwidth_s,censored_count,replications\n";
        for (const auto& c : clients)
            out += c.client + "," + c.source + "," + fmt_g(c.mean_delay) + "," +
                   fmt_g(c.ci95_halfwidth) + "," + std::to_string(c.censored) + "," +
                   std::to_string(c.replications) + "\n";
        return out;
    }
};

class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& w) : std::runtime_error(w) {}
};

namespace detail {

struct RepResult {
    std::vector<double> decode_time;   // per sorted-client index, -1 = censored
    std::vector<std::vector<long long>> type_counts;
    std::vector<double> observed;      // slots observed per client
    uint64_t hash = 1469598103934665603ull;
    long long transmissions = 0;
    long long losses = 0;
    long long non_innovative = 0;
};

inline void hash_event(uint64_t& h, double time, int link, int code, TypeMask type) {
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    uint64_t tbits;
    static_assert(sizeof(tbits) == sizeof(time));
    std::memcpy(&tbits, &time, sizeof(tbits));
    mix(tbits);
    mix((static_cast<uint64_t>(link) << 16) | (static_cast<uint64_t>(code) << 8) | type);
}

}  // namespace detail

inline SimReport run_simulation(const Topology& topo, const Forwarding& fw, const SimConfig& cfg) {
    if (cfg.max_time <= 0.0) throw SimulationError("simulation budget must be positive");
    if (cfg.replications < 1) throw SimulationError("need at least one replication");
    const GaloisField& gf = GaloisField::gf256();
    const BlockLayout layout(topo);
    const std::size_t type_count = (std::size_t{1} << topo.source_count()) - 1;

    std::vector<int> clients = topo.clients();
    std::sort(clients.begin(), clients.end(),
              [&](int a, int b) { return topo.nodes()[a].name < topo.nodes()[b].name; });

    auto run_rep = [&](int rep) {
        std::mt19937_64 rng = make_rng(cfg.seed, static_cast<uint64_t>(rep));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        // per-replication source symbols
        std::vector<std::vector<uint8_t>> symbols(topo.source_count());
        std::uniform_int_distribution<int> byte(0, gf.size() - 1);
        for (int b = 0; b < topo.source_count(); ++b) {
            symbols[b].resize(topo.source_info(b).symbols);
            for (auto& v : symbols[b]) v = static_cast<uint8_t>(byte(rng));
        }

        std::vector<NodeBuffer> buffers(topo.nodes().size(), NodeBuffer(layout, gf));
        for (int b = 0; b < topo.source_count(); ++b) {
            const int node = topo.source_node_of_bit(b);
            for (int k = 0; k < layout.len[b]; ++k) {
                CodedPacket p;
                p.coeffs.assign(layout.cols, 0);
                p.coeffs[layout.begin[b] + k] = 1;
                p.payload = symbols[b][k];
                p.type = TypeMask{1} << b;
                buffers[node].add(p);
            }
        }

        struct Event {
            double time;
            int link;
            bool operator>(const Event& o) const {
                return time != o.time ? time > o.time : link > o.link;
            }
        };
        std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap;
        for (std::size_t l = 0; l < topo.links().size(); ++l) {
            const double period = 1.0 / topo.links()[l].capacity;
            heap.push({unit(rng) * period, static_cast<int>(l)});
        }

        detail::RepResult res;
        res.decode_time.assign(clients.size(), -1.0);
        res.type_counts.assign(clients.size(), std::vector<long long>(type_count, 0));
        res.observed.assign(clients.size(), 0.0);

        std::vector<int> client_index(topo.nodes().size(), -1);
        for (std::size_t i = 0; i < clients.size(); ++i) client_index[clients[i]] = static_cast<int>(i);
        std::size_t undecoded = clients.size();

        auto producible = [&](int node, TypeMask t) {
            TypeMask covered = 0;
            for (const auto& p : buffers[node].packets())
                if ((p.type & t) == p.type) covered |= p.type;
            return (covered & t) == t;
        };

        while (!heap.empty() && undecoded > 0) {
            const Event ev = heap.top();
            heap.pop();
            if (ev.time > cfg.max_time) break;
            const Link& link = topo.links()[ev.link];
            heap.push({ev.time + 1.0 / link.capacity, ev.link});

            // sample the forwarding distribution; remainder = idle
            const auto& w = fw.w[ev.link];
            double u = unit(rng);
            TypeMask chosen = 0;
            for (std::size_t t = 0; t < w.size(); ++t) {
                if (w[t] <= 0.0) continue;
                if (u < w[t]) {
                    chosen = TypeLattice::mask_at(t);
                    break;
                }
                u -= w[t];
            }
            if (chosen == 0) {
                detail::hash_event(res.hash, ev.time, ev.link, 0, 0);
                continue;
            }

            std::optional<CodedPacket> pkt =
                recode(buffers[link.from], chosen, layout, gf, rng);
            if (!pkt) {
                // resample among the producible types, renormalized
                double total = 0.0;
                std::vector<std::pair<std::size_t, double>> usable;
                for (std::size_t t = 0; t < w.size(); ++t) {
                    if (w[t] <= 0.0) continue;
                    if (!producible(link.from, TypeLattice::mask_at(t))) continue;
                    usable.push_back({t, w[t]});
                    total += w[t];
                }
                if (total > 0.0) {
                    double v = unit(rng) * total;
                    for (const auto& [t, wt] : usable) {
                        if (v < wt) {
                            pkt = recode(buffers[link.from], TypeLattice::mask_at(t), layout, gf, rng);
                            break;
                        }
                        v -= wt;
                    }
                }
            }
            if (!pkt) {
                detail::hash_event(res.hash, ev.time, ev.link, 1, chosen);
                continue;  // nothing producible, slot idles
            }

            ++res.transmissions;
            if (unit(rng) < link.loss) {
                ++res.losses;
                detail::hash_event(res.hash, ev.time, ev.link, 2, pkt->type);
                continue;
            }

            const int to = link.to;
            const bool innovative = buffers[to].add(*pkt);
            if (!innovative) {
                ++res.non_innovative;
                detail::hash_event(res.hash, ev.time, ev.link, 3, pkt->type);
                continue;
            }
            detail::hash_event(res.hash, ev.time, ev.link, 4, pkt->type);

            const int ci = client_index[to];
            if (ci >= 0) {
                res.type_counts[ci][TypeLattice::index_of(pkt->type)] += 1;
                if (res.decode_time[ci] < 0.0) {
                    const int target = topo.subscription(to);
                    if (buffers[to].block_decoded(target)) {
                        // independent verification of the decode event
                        CoeffMatrix raw = buffers[to].raw_matrix();
                        const std::size_t base_rank = rank(raw, gf);
                        CoeffMatrix targeted(0, layout.cols);
                        for (const auto& p : buffers[to].packets())
                            if (contains_source(p.type, target)) targeted.append_row(p.coeffs);
                        if (rank(targeted, gf) < static_cast<std::size_t>(layout.len[target]))
                            throw SimulationError("decode without enough target-touching rows");
                        for (int j = 0; j < layout.len[target]; ++j) {
                            CoeffMatrix aug = raw;
                            std::vector<uint8_t> e(layout.cols, 0);
                            e[layout.begin[target] + j] = 1;
                            aug.append_row(e);
                            if (rank(aug, gf) != base_rank)
                                throw SimulationError("decode with undetermined target column");
                        }
                        const SolveResult solved =
                            solve_for_source(raw, buffers[to].raw_rhs(), layout.begin[target],
                                             layout.len[target], gf);
                        if (!solved.feasible || solved.symbols != symbols[target])
                            throw SimulationError("decoded symbols disagree with the source");
                        res.decode_time[ci] = ev.time;
                        --undecoded;
                    }
                }
            }
        }

        for (std::size_t i = 0; i < clients.size(); ++i) {
            const double horizon = res.decode_time[i] >= 0.0 ? res.decode_time[i] : cfg.max_time;
            double cap = 0.0;
            for (int l : topo.in_links(clients[i])) cap += topo.links()[l].capacity;
            res.observed[i] = horizon * cap;  // expected slot count at the client
        }
        return res;
    };

    const int hw = cfg.threads > 0 ? cfg.threads
                                   : std::max(1u, std::thread::hardware_concurrency());
    std::vector<detail::RepResult> reps(cfg.replications);
    for (int base = 0; base < cfg.replications; base += hw) {
        const int batch = std::min(hw, cfg.replications - base);
        std::vector<std::future<detail::RepResult>> futs;
        for (int i = 1; i < batch; ++i)
            futs.push_back(std::async(std::launch::async, run_rep, base + i));
        reps[base] = run_rep(base);
        for (int i = 1; i < batch; ++i) reps[base + i] = futs[i - 1].get();
    }

    SimReport report;
    report.event_hash = 1469598103934665603ull;
    for (const auto& r : reps) {
        report.event_hash ^= r.hash;
        report.event_hash *= 1099511628211ull;
        report.transmissions += r.transmissions;
        report.losses += r.losses;
        report.non_innovative += r.non_innovative;
    }

    for (std::size_t i = 0; i < clients.size(); ++i) {
        ClientStats st;
        st.client = topo.nodes()[clients[i]].name;
        st.source = topo.nodes()[topo.source_node_of_bit(topo.subscription(clients[i]))].name;
        st.replications = cfg.replications;
        std::vector<double> times;
        double slots = 0.0;
        std::vector<double> counts(type_count, 0.0);
        for (const auto& r : reps) {
            if (r.decode_time[i] >= 0.0)
                times.push_back(r.decode_time[i]);
            else
                ++st.censored;
            slots += r.observed[i];
            for (std::size_t t = 0; t < type_count; ++t) counts[t] += r.type_counts[i][t];
        }
        if (!times.empty()) {
            double mean = 0.0;
            for (double t : times) mean += t;
            mean /= static_cast<double>(times.size());
            double var = 0.0;
            for (double t : times) var += (t - mean) * (t - mean);
            var = times.size() > 1 ? var / static_cast<double>(times.size() - 1) : 0.0;
            st.mean_delay = mean;
            st.ci95_halfwidth = 1.96 * std::sqrt(var / static_cast<double>(times.size()));
        }
        st.type_fraction.assign(type_count, 0.0);
        if (slots > 0.0)
            for (std::size_t t = 0; t < type_count; ++t) st.type_fraction[t] = counts[t] / slots;
        report.clients.push_back(std::move(st));
    }
    return report;
}

}  // namespace ncmix
