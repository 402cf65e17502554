#pragma once

// Packet types and the derived type sets. A type is the nonempty subset of
// sources mixed into a coded packet, held as a bitmask (source index = bit
// position), which makes subset tests O(1) and gives a stable order for
// serialization: ascending mask, i.e. type index = mask - 1.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncmix {

using TypeMask = uint32_t;

inline int popcount_mask(TypeMask t) { return std::popcount(t); }
inline bool is_singleton(TypeMask t) { return std::has_single_bit(t); }
inline bool contains_source(TypeMask t, int source) { return (t >> source) & 1u; }

class TypeLattice {
public:
    static constexpr int kMaxSources = 8;

    explicit TypeLattice(int sources) : sources_(sources) {
        if (sources < 1 || sources > kMaxSources)
            throw std::invalid_argument("TypeLattice: source count must be in [1,8]");
        full_ = (TypeMask{1} << sources) - 1;
        all_types_.reserve(full_);
        for (TypeMask t = 1; t <= full_; ++t) all_types_.push_back(t);
    }

    int source_count() const { return sources_; }
    TypeMask full_mask() const { return full_; }
    const std::vector<TypeMask>& all_types() const { return all_types_; }
    std::size_t type_count() const { return all_types_.size(); }

    // |T| indexing used by every dense per-type array in the library.
    static std::size_t index_of(TypeMask t) { return t - 1; }
    static TypeMask mask_at(std::size_t index) { return static_cast<TypeMask>(index + 1); }

    bool valid(TypeMask t) const { return t >= 1 && t <= full_; }

    // T_t: every nonempty subset of the sources mixed in t.
    std::vector<TypeMask> component_types(TypeMask t) const {
        require(t);
        std::vector<TypeMask> out;
        for (TypeMask sub = t; sub != 0; sub = (sub - 1) & t) out.push_back(sub);
        // enumeration above runs high-to-low; flip to ascending mask order
        std::reverse(out.begin(), out.end());
        return out;
    }

    // T_{t,s}: component types of t that carry data from source s.
    std::vector<TypeMask> component_types_with_source(TypeMask t, int source) const {
        require(t);
        if (!contains_source(t, source))
            throw std::invalid_argument("component_types_with_source: source not in type");
        std::vector<TypeMask> out;
        for (TypeMask sub = t; sub != 0; sub = (sub - 1) & t) {
            if (contains_source(sub, source)) out.push_back(sub);
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    std::vector<int> sources_of(TypeMask t) const {
        require(t);
        std::vector<int> out;
        for (int s = 0; s < sources_; ++s)
            if (contains_source(t, s)) out.push_back(s);
        return out;
    }

private:
    void require(TypeMask t) const {
        if (!valid(t)) throw std::invalid_argument("TypeLattice: type outside lattice");
    }

    int sources_;
    TypeMask full_;
    std::vector<TypeMask> all_types_;
};

// Render a type as the sorted list of source names joined by '+', the form
// used in CSV cells ("S1+S3"). `names` is indexed by source bit.
inline std::string type_label(TypeMask t, const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t s = 0; s < names.size(); ++s) {
        if (!contains_source(t, static_cast<int>(s))) continue;
        if (!out.empty()) out += '+';
        out += names[s];
    }
    return out;
}

}  // namespace ncmix
