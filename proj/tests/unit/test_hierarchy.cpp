#include <doctest.h>

#include <map>
#include <set>
#include <vector>

#include "hhdeco/error.hpp"
#include "hhdeco/heom/hierarchy.hpp"

using namespace hhdeco;
using namespace hhdeco::heom;

namespace {

// every multi-index with sum <= depth, by brute-force counting
std::size_t brute_count(int modes, int depth) {
    std::size_t n = 0;
    std::vector<int> v(static_cast<std::size_t>(modes), 0);
    while (true) {
        int s = 0;
        for (int x : v) s += x;
        if (s <= depth) ++n;
        std::size_t k = 0;
        while (k < v.size() && ++v[k] > depth) v[k++] = 0;
        if (k == v.size()) break;
    }
    return n;
}

} // namespace

TEST_CASE("ADO counts") {
    CHECK(Hierarchy::count(12, 3) == 455);
    CHECK(build_hierarchy(4, 2, 3).size() == 455);
    for (int m = 1; m <= 5; ++m)
        for (int L = 0; L <= 4; ++L) CHECK(Hierarchy::count(m, L) == brute_count(m, L));
    CHECK(Hierarchy::count(8, 8) == 12870);
}

TEST_CASE("enumeration is a bijection with consistent neighbours") {
    const Hierarchy h(5, 4);
    std::set<std::vector<std::uint8_t>> seen;
    CHECK(h.tier(0) == 0);
    for (std::size_t a = 0; a < h.size(); ++a) {
        const auto n = h.index(a);
        seen.emplace(n.begin(), n.end());
        CHECK(h.find(n) == a);
        if (a > 0) CHECK(h.tier(a) >= h.tier(a - 1));
        for (int j = 0; j < 5; ++j) {
            const auto up = h.raise(a, j);
            if (h.tier(a) == 4) {
                CHECK(up == Hierarchy::kNone);
            } else {
                REQUIRE(up != Hierarchy::kNone);
                CHECK(h.index(static_cast<std::size_t>(up))[static_cast<std::size_t>(j)] == n[static_cast<std::size_t>(j)] + 1);
                CHECK(h.lower(static_cast<std::size_t>(up), j) == static_cast<std::ptrdiff_t>(a));
            }
            if (n[static_cast<std::size_t>(j)] == 0) CHECK(h.lower(a, j) == Hierarchy::kNone);
        }
    }
    CHECK(seen.size() == h.size());
    const std::vector<std::uint8_t> deep{3, 2, 0, 0, 0};
    CHECK_FALSE(h.find(deep));
}

TEST_CASE("memory cap") {
    CHECK_THROWS_AS(build_hierarchy(4, 3, 8, 4, 1 << 20), NumericalError);
    CHECK_THROWS_AS(build_hierarchy(4, -1, 2), std::invalid_argument);
    auto store = build_hierarchy(1, 1, 2, 2);
    store.ado(3)(1, 0) = {2.0, -1.0};
    CHECK(store.max_abs() == doctest::Approx(std::sqrt(5.0)));
    store.set_zero();
    CHECK(store.max_abs() == 0.0);
}
