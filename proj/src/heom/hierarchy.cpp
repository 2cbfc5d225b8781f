#include "hhdeco/heom/hierarchy.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "hhdeco/error.hpp"

namespace hhdeco::heom {

namespace {

std::size_t checked_add(std::size_t a, std::size_t b) {
    if (a > std::numeric_limits<std::size_t>::max() - b) throw std::overflow_error("hierarchy size overflow");
    return a + b;
}

// table[m][t] = C(m - 1 + t, t) compositions of t into m parts (table[0][0] = 1)
std::vector<std::vector<std::size_t>> composition_table(int n_modes, int depth) {
    std::vector<std::vector<std::size_t>> table(static_cast<std::size_t>(n_modes) + 1,
                                                std::vector<std::size_t>(static_cast<std::size_t>(depth) + 1, 0));
    table[0][0] = 1;
    for (std::size_t m = 1; m < table.size(); ++m) {
        std::size_t running = 0;
        for (std::size_t t = 0; t <= static_cast<std::size_t>(depth); ++t) {
            running = checked_add(running, table[m - 1][t]);
            table[m][t] = running;
        }
    }
    return table;
}

} // namespace

std::size_t Hierarchy::count(int n_modes, int depth) {
    if (n_modes < 0 || depth < 0) throw std::invalid_argument("Hierarchy::count: negative argument");
    const auto table = composition_table(n_modes, depth);
    std::size_t total = 0;
    for (int t = 0; t <= depth; ++t) total = checked_add(total, table[static_cast<std::size_t>(n_modes)][static_cast<std::size_t>(t)]);
    return total;
}

Hierarchy::Hierarchy(int n_modes, int depth) : n_modes_(n_modes), depth_(depth) {
    if (n_modes < 0) throw std::invalid_argument("Hierarchy: n_modes must be >= 0");
    if (depth < 0 || depth > 255) throw std::invalid_argument("Hierarchy: depth must be in [0, 255]");
    binom_ = composition_table(n_modes, depth);
    const std::size_t total = count(n_modes, depth);
    const auto M = static_cast<std::size_t>(n_modes);

    indices_.reserve(total * M);
    tiers_.reserve(total);
    tier_offset_.assign(static_cast<std::size_t>(depth) + 2, 0);

    std::vector<std::uint8_t> current(M, 0);
    // Emit all compositions of `remaining` over positions >= pos, first
    // component largest first (descending lexicographic).
    auto emit = [&](auto&& self, std::size_t pos, int remaining, int tier) -> void {
        if (M == 0) {
            if (remaining == 0) tiers_.push_back(tier);
            return;
        }
        if (pos + 1 == M) {
            current[pos] = static_cast<std::uint8_t>(remaining);
            indices_.insert(indices_.end(), current.begin(), current.end());
            tiers_.push_back(tier);
            current[pos] = 0;
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            current[pos] = static_cast<std::uint8_t>(v);
            self(self, pos + 1, remaining - v, tier);
        }
        current[pos] = 0;
    };
    for (int t = 0; t <= depth; ++t) {
        tier_offset_[static_cast<std::size_t>(t)] = tiers_.size();
        if (M == 0 && t > 0) continue;
        emit(emit, 0, t, t);
    }
    tier_offset_[static_cast<std::size_t>(depth) + 1] = tiers_.size();

    up_.assign(size() * M, kNone);
    down_.assign(size() * M, kNone);
    std::vector<std::uint8_t> probe(M);
    for (std::size_t a = 0; a < size(); ++a) {
        const auto n = index(a);
        for (std::size_t j = 0; j < M; ++j) {
            std::copy(n.begin(), n.end(), probe.begin());
            if (tiers_[a] < depth) {
                ++probe[j];
                up_[a * M + j] = static_cast<std::ptrdiff_t>(rank(probe));
                --probe[j];
            }
            if (n[j] > 0) {
                --probe[j];
                down_[a * M + j] = static_cast<std::ptrdiff_t>(rank(probe));
            }
        }
    }
}

// Position of n in the enumeration order, computed combinatorially.
std::size_t Hierarchy::rank(std::span<const std::uint8_t> n) const {
    int remaining = 0;
    for (auto v : n) remaining += v;
    std::size_t offset = tier_offset_[static_cast<std::size_t>(remaining)];
    const auto M = n.size();
    for (std::size_t pos = 0; pos + 1 < M; ++pos) {
        // compositions that place a larger value at `pos` come first
        const std::size_t parts_after = M - pos - 1;
        for (int v = remaining; v > n[pos]; --v)
            offset += binom_[parts_after][static_cast<std::size_t>(remaining - v)];
        remaining -= n[pos];
    }
    return offset;
}

std::optional<std::size_t> Hierarchy::find(std::span<const std::uint8_t> n) const {
    if (n.size() != static_cast<std::size_t>(n_modes_)) return std::nullopt;
    int tier = 0;
    for (auto v : n) tier += v;
    if (tier > depth_) return std::nullopt;
    return rank(n);
}

AdoStore::AdoStore(std::shared_ptr<const Hierarchy> hierarchy, int dim)
    : hierarchy_(std::move(hierarchy)), dim_(dim) {
    if (!hierarchy_) throw std::invalid_argument("AdoStore: null hierarchy");
    if (dim <= 0) throw std::invalid_argument("AdoStore: dim must be > 0");
    data_.assign(hierarchy_->size() * block(), cplx{0.0, 0.0});
}

void AdoStore::set_zero() { std::fill(data_.begin(), data_.end(), cplx{0.0, 0.0}); }

double AdoStore::max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
}

AdoStore build_hierarchy(int n_baths, int K, int L, int dim, std::size_t memory_cap) {
    if (n_baths < 0 || K < 0) throw std::invalid_argument("build_hierarchy: arguments must be nonnegative");
    if (L < 1) throw std::invalid_argument("build_hierarchy: L must be >= 1");
    const int modes = n_baths * (K + 1);
    const std::size_t n_ado = Hierarchy::count(modes, L);
    const long double bytes = static_cast<long double>(n_ado) * dim * dim * sizeof(cplx);
    if (bytes > static_cast<long double>(memory_cap))
        throw NumericalError("build_hierarchy: " + std::to_string(n_ado) + " ADOs exceed the memory cap of " +
                             std::to_string(memory_cap) + " bytes");
    return AdoStore(std::make_shared<const Hierarchy>(modes, L), dim);
}

} // namespace hhdeco::heom
