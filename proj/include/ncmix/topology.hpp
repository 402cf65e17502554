#pragma once

// Network model: a DAG of sources, intermediate nodes and clients with
// per-link capacity (packets/sec) and loss rate. Parsed from a JSON document
// with top-level keys `nodes`, `links`, `sources`, `subscriptions`; see
// README for the schema. Immutable after parsing.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncmix/lattice.hpp"

namespace ncmix {

enum class NodeRole { source, intermediate, client };

struct Node {
    std::string name;
    NodeRole role;
};

struct Link {
    int from = -1;
    int to = -1;
    double capacity = 0.0;
    double loss = 0.0;
    std::string group;  // optional label used by sweep/drop-links

    double effective_bandwidth() const { return capacity * (1.0 - loss); }
};

struct SourceInfo {
    int node = -1;
    int symbols = 0;   // N_s
    double rate = 0.0; // emission rate per outgoing link, packets/sec
};

class TopologyError : public std::runtime_error {
public:
    explicit TopologyError(const std::string& what) : std::runtime_error(what) {}
};

class Topology {
public:
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<std::string>& notes() const { return notes_; }

    int node_id(const std::string& name) const {
        auto it = node_index_.find(name);
        if (it == node_index_.end()) throw TopologyError("unknown node: " + name);
        return it->second;
    }
    const Node& node(int id) const { return nodes_.at(id); }
    bool has_node(const std::string& name) const { return node_index_.count(name) != 0; }

    int link_id(int from, int to) const {
        auto it = link_index_.find({from, to});
        if (it == link_index_.end())
            throw TopologyError("unknown link: " + nodes_[from].name + "->" + nodes_[to].name);
        return it->second;
    }
    bool has_link(int from, int to) const { return link_index_.count({from, to}) != 0; }

    const std::vector<int>& out_links(int node) const { return out_links_.at(node); }
    const std::vector<int>& in_links(int node) const { return in_links_.at(node); }

    std::vector<int> parents(int node) const {
        std::vector<int> out;
        for (int l : in_links_.at(node)) out.push_back(links_[l].from);
        return out;
    }
    std::vector<int> children(int node) const {
        std::vector<int> out;
        for (int l : out_links_.at(node)) out.push_back(links_[l].to);
        return out;
    }

    // Source bookkeeping. Source bit = index into sorted source-name order.
    int source_count() const { return static_cast<int>(source_nodes_.size()); }
    const std::vector<int>& source_nodes() const { return source_nodes_; }
    int source_bit(int node) const {
        auto it = source_bit_.find(node);
        if (it == source_bit_.end()) throw TopologyError("node is not a source");
        return it->second;
    }
    int source_node_of_bit(int bit) const { return source_nodes_.at(bit); }
    const SourceInfo& source_info(int bit) const { return source_infos_.at(bit); }
    std::vector<std::string> source_names() const {
        std::vector<std::string> out;
        for (int n : source_nodes_) out.push_back(nodes_[n].name);
        return out;
    }
    int total_symbols() const {
        int t = 0;
        for (const auto& s : source_infos_) t += s.symbols;
        return t;
    }

    const std::vector<int>& clients() const { return client_nodes_; }
    int subscription(int client) const {
        auto it = subscriptions_.find(client);
        if (it == subscriptions_.end()) throw TopologyError("client has no subscription");
        return it->second;  // source bit
    }

    // d_c: time to receive one packet, the reciprocal of total incoming capacity.
    double client_slot_time(int client) const {
        double cap = 0.0;
        for (int l : in_links_.at(client)) cap += links_[l].capacity;
        if (cap <= 0.0)
            throw TopologyError("client " + nodes_[client].name + " has zero incoming capacity");
        return 1.0 / cap;
    }

    // Node-name-order Kahn ordering; existence was checked at construction.
    const std::vector<int>& topological_order() const { return topo_order_; }

    TypeLattice make_lattice() const { return TypeLattice(source_count()); }

    static Topology parse(const std::string& text);
    std::string serialize() const;

    // Copy with every link in `group` set to `capacity` (sweep support).
    Topology with_group_capacity(const std::string& group, double capacity) const {
        Topology t = *this;
        bool hit = false;
        for (auto& l : t.links_) {
            if (l.group == group) {
                l.capacity = capacity;
                hit = true;
            }
        }
        if (!hit) throw TopologyError("no links in group: " + group);
        return t;
    }

    // Copy without the links in `group` (e.g. to drop helper cross-links).
    Topology without_group(const std::string& group) const {
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(serialize());
        auto& links = j["links"];
        for (auto it = links.begin(); it != links.end();) {
            if (it->value("group", "") == group)
                it = links.erase(it);
            else
                ++it;
        }
        return parse(j.dump());
    }

    // Copy with every source's symbol count replaced (CLI --symbols override).
    Topology with_symbols(int symbols) const {
        if (symbols < 1) throw TopologyError("symbols must be >= 1");
        Topology t = *this;
        for (auto& s : t.source_infos_) s.symbols = symbols;
        return t;
    }

private:
    void build_indexes_and_validate();

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<std::string> notes_;
    std::map<std::string, int> node_index_;
    std::map<std::pair<int, int>, int> link_index_;
    std::vector<std::vector<int>> out_links_;
    std::vector<std::vector<int>> in_links_;
    std::vector<int> source_nodes_;   // by bit
    std::map<int, int> source_bit_;   // node -> bit
    std::vector<SourceInfo> source_infos_;
    std::vector<int> client_nodes_;
    std::map<int, int> subscriptions_;  // client node -> source bit
    std::vector<int> topo_order_;
};

inline Topology Topology::parse(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw TopologyError(std::string("topology parse error: ") + e.what());
    }

    Topology t;
    try {
        if (!j.contains("nodes") || !j.contains("links") || !j.contains("sources") ||
            !j.contains("subscriptions"))
            throw TopologyError("topology document needs nodes, links, sources, subscriptions");

        for (const auto& jn : j.at("nodes")) {
            Node n;
            n.name = jn.at("name").get<std::string>();
            const std::string role = jn.at("role").get<std::string>();
            if (role == "source")
                n.role = NodeRole::source;
            else if (role == "intermediate")
                n.role = NodeRole::intermediate;
            else if (role == "client")
                n.role = NodeRole::client;
            else
                throw TopologyError("node " + n.name + ": unknown role '" + role + "'");
            if (t.node_index_.count(n.name)) throw TopologyError("duplicate node: " + n.name);
            t.node_index_[n.name] = static_cast<int>(t.nodes_.size());
            t.nodes_.push_back(n);
        }

        for (const auto& jl : j.at("links")) {
            Link l;
            l.from = t.node_id(jl.at("from").get<std::string>());
            l.to = t.node_id(jl.at("to").get<std::string>());
            l.capacity = jl.at("capacity").get<double>();
            l.loss = jl.at("loss").get<double>();
            l.group = jl.value("group", "");
            if (t.link_index_.count({l.from, l.to}))
                throw TopologyError("duplicate link: " + t.nodes_[l.from].name + "->" +
                                    t.nodes_[l.to].name);
            t.link_index_[{l.from, l.to}] = static_cast<int>(t.links_.size());
            t.links_.push_back(l);
        }

        std::map<std::string, std::pair<int, double>> src_fields;
        for (const auto& js : j.at("sources")) {
            src_fields[js.at("name").get<std::string>()] = {js.at("symbols").get<int>(),
                                                            js.at("rate").get<double>()};
        }
        // bits in sorted source-name order
        std::vector<std::string> src_names;
        for (const auto& n : t.nodes_)
            if (n.role == NodeRole::source) src_names.push_back(n.name);
        std::sort(src_names.begin(), src_names.end());
        for (const auto& name : src_names) {
            auto it = src_fields.find(name);
            if (it == src_fields.end()) throw TopologyError("source " + name + " missing from sources list");
            SourceInfo si;
            si.node = t.node_id(name);
            si.symbols = it->second.first;
            si.rate = it->second.second;
            t.source_bit_[si.node] = static_cast<int>(t.source_nodes_.size());
            t.source_nodes_.push_back(si.node);
            t.source_infos_.push_back(si);
        }
        for (const auto& [name, _] : src_fields) {
            int id = t.node_id(name);
            if (t.nodes_[id].role != NodeRole::source)
                throw TopologyError("sources entry " + name + " is not a source node");
        }

        for (const auto& js : j.at("subscriptions")) {
            const int client = t.node_id(js.at("client").get<std::string>());
            const int source = t.node_id(js.at("source").get<std::string>());
            if (t.nodes_[client].role != NodeRole::client)
                throw TopologyError("subscription client " + t.nodes_[client].name + " is not a client");
            if (t.nodes_[source].role != NodeRole::source)
                throw TopologyError("subscription target " + t.nodes_[source].name + " is not a source");
            if (t.subscriptions_.count(client))
                throw TopologyError("client " + t.nodes_[client].name + " subscribed twice");
            t.subscriptions_[client] = t.source_bit_.at(source);
        }

        if (j.contains("notes"))
            for (const auto& s : j.at("notes")) t.notes_.push_back(s.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw TopologyError(std::string("topology field error: ") + e.what());
    }

    t.build_indexes_and_validate();
    return t;
}

inline void Topology::build_indexes_and_validate() {
    const int n = static_cast<int>(nodes_.size());
    out_links_.assign(n, {});
    in_links_.assign(n, {});
    for (std::size_t i = 0; i < links_.size(); ++i) {
        const Link& l = links_[i];
        if (l.capacity <= 0.0)
            throw TopologyError("link " + nodes_[l.from].name + "->" + nodes_[l.to].name +
                                ": capacity must be positive");
        if (l.loss < 0.0 || l.loss >= 1.0)
            throw TopologyError("link " + nodes_[l.from].name + "->" + nodes_[l.to].name +
                                ": loss must be in [0,1)");
        if (l.from == l.to) throw TopologyError("self-loop at " + nodes_[l.from].name);
        out_links_[l.from].push_back(static_cast<int>(i));
        in_links_[l.to].push_back(static_cast<int>(i));
    }

    if (source_nodes_.empty()) throw TopologyError("no sources");
    if (source_count() > TypeLattice::kMaxSources)
        throw TopologyError("more than 8 sources is unsupported");
    for (const auto& si : source_infos_) {
        if (si.symbols < 1) throw TopologyError("source " + nodes_[si.node].name + ": symbols must be >= 1");
        if (si.rate <= 0.0) throw TopologyError("source " + nodes_[si.node].name + ": rate must be positive");
    }

    for (int i = 0; i < n; ++i)
        if (nodes_[i].role == NodeRole::client) client_nodes_.push_back(i);
    if (client_nodes_.empty()) throw TopologyError("no clients");
    for (int c : client_nodes_) {
        if (!subscriptions_.count(c))
            throw TopologyError("client " + nodes_[c].name + " has no subscription");
        if (in_links_[c].empty())
            throw TopologyError("client " + nodes_[c].name + " has no incoming links");
    }

    // Kahn with node-name tie-breaking (node ids follow document order, so
    // order candidates by name for a stable result).
    std::vector<int> indeg(n, 0);
    for (const auto& l : links_) ++indeg[l.to];
    auto name_less = [&](int a, int b) { return nodes_[a].name < nodes_[b].name; };
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    std::sort(ready.begin(), ready.end(), name_less);
    topo_order_.clear();
    while (!ready.empty()) {
        const int v = ready.front();
        ready.erase(ready.begin());
        topo_order_.push_back(v);
        std::vector<int> newly;
        for (int l : out_links_[v])
            if (--indeg[links_[l].to] == 0) newly.push_back(links_[l].to);
        std::sort(newly.begin(), newly.end(), name_less);
        // keep `ready` sorted by merging
        std::vector<int> merged;
        std::merge(ready.begin(), ready.end(), newly.begin(), newly.end(),
                   std::back_inserter(merged), name_less);
        ready = std::move(merged);
    }
    if (static_cast<int>(topo_order_.size()) != n)
        throw TopologyError("graph has a cycle");
}

inline std::string Topology::serialize() const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : nodes_) {
        const char* role = n.role == NodeRole::source        ? "source"
                           : n.role == NodeRole::intermediate ? "intermediate"
                                                              : "client";
        j["nodes"].push_back({{"name", n.name}, {"role", role}});
    }
    j["links"] = nlohmann::ordered_json::array();
    for (const auto& l : links_) {
        nlohmann::ordered_json jl = {{"from", nodes_[l.from].name},
                                     {"to", nodes_[l.to].name},
                                     {"capacity", l.capacity},
                                     {"loss", l.loss}};
        if (!l.group.empty()) jl["group"] = l.group;
        j["links"].push_back(jl);
    }
    j["sources"] = nlohmann::ordered_json::array();
    for (std::size_t b = 0; b < source_infos_.size(); ++b) {
        j["sources"].push_back({{"name", nodes_[source_infos_[b].node].name},
                                {"symbols", source_infos_[b].symbols},
                                {"rate", source_infos_[b].rate}});
    }
    j["subscriptions"] = nlohmann::ordered_json::array();
    for (int c : client_nodes_) {
        j["subscriptions"].push_back(
            {{"client", nodes_[c].name},
             {"source", nodes_[source_nodes_[subscriptions_.at(c)]].name}});
    }
    if (!notes_.empty()) j["notes"] = notes_;
    return j.dump(2) + "\n";
}

}  // namespace ncmix
