#include <catch_amalgamated.hpp>

#include <set>

#include "ncmix/lattice.hpp"

using ncmix::TypeLattice;
using ncmix::TypeMask;

TEST_CASE("lattice enumerates 2^S - 1 types") {
    REQUIRE(TypeLattice(1).type_count() == 1);
    REQUIRE(TypeLattice(2).type_count() == 3);
    REQUIRE(TypeLattice(3).type_count() == 7);
    REQUIRE(TypeLattice(8).type_count() == 255);
    REQUIRE_THROWS(TypeLattice(0));
    REQUIRE_THROWS(TypeLattice(9));
}

TEST_CASE("component types are the nonempty subsets") {
    TypeLattice l2(2);
    const TypeMask ab = 0b11;
    auto subs = l2.component_types(ab);
    REQUIRE(subs == std::vector<TypeMask>{0b01, 0b10, 0b11});

    TypeLattice l3(3);
    REQUIRE(l3.component_types(0b001) == std::vector<TypeMask>{0b001});
    REQUIRE(l3.component_types(0b111).size() == 7);
}

TEST_CASE("component types with a source") {
    TypeLattice l3(3);
    // t = {A,B}, s = A  ->  {A}, {A,B}
    REQUIRE(l3.component_types_with_source(0b011, 0) == std::vector<TypeMask>{0b001, 0b011});
    // t = {A}, s = A -> {A}
    REQUIRE(l3.component_types_with_source(0b001, 0) == std::vector<TypeMask>{0b001});
    // t = {A,B,C}, s = B -> {B}, {A,B}, {B,C}, {A,B,C}
    REQUIRE(l3.component_types_with_source(0b111, 1) ==
            std::vector<TypeMask>{0b010, 0b011, 0b110, 0b111});
    REQUIRE_THROWS(l3.component_types_with_source(0b001, 1));
}

TEST_CASE("|T_{t,s}| = 2^(|S_t|-1) for every member source") {
    TypeLattice l(3);
    for (TypeMask t : l.all_types()) {
        for (int s : l.sources_of(t)) {
            const auto v = l.component_types_with_source(t, s);
            REQUIRE(v.size() == (std::size_t{1} << (ncmix::popcount_mask(t) - 1)));
        }
    }
}

TEST_CASE("T_t is closed under nonempty intersection") {
    TypeLattice l(3);
    for (TypeMask t : l.all_types()) {
        const auto subs = l.component_types(t);
        const std::set<TypeMask> in(subs.begin(), subs.end());
        for (TypeMask a : subs)
            for (TypeMask b : subs) {
                const TypeMask i = a & b;
                if (i != 0) REQUIRE(in.count(i) == 1);
            }
    }
}

TEST_CASE("type labels are sorted source-name joins") {
    const std::vector<std::string> names = {"S1", "S2", "S3"};
    REQUIRE(ncmix::type_label(0b001, names) == "S1");
    REQUIRE(ncmix::type_label(0b101, names) == "S1+S3");
    REQUIRE(ncmix::type_label(0b111, names) == "S1+S2+S3");
}

TEST_CASE("index round trip") {
    TypeLattice l(3);
    for (TypeMask t : l.all_types())
        REQUIRE(TypeLattice::mask_at(TypeLattice::index_of(t)) == t);
}
