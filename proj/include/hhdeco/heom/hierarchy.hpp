// hierarchy.hpp: Multi-index bookkeeping and ADO storage for the HEOM.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hhdeco/linalg.hpp"

namespace hhdeco::heom {

/// All multi-indices n = (n_1..n_M) with sum n_j <= L, enumerated by tier and
/// lexicographically (descending) inside a tier. Index 0 is the zero vector.
class Hierarchy {
public:
    static constexpr std::ptrdiff_t kNone = -1;

    Hierarchy(int n_modes, int depth);

    /// C(M + L, L); throws std::overflow_error when it does not fit in size_t.
    static std::size_t count(int n_modes, int depth);

    [[nodiscard]] std::size_t size() const noexcept { return tiers_.size(); }
    [[nodiscard]] int n_modes() const noexcept { return n_modes_; }
    [[nodiscard]] int depth() const noexcept { return depth_; }

    [[nodiscard]] std::span<const std::uint8_t> index(std::size_t a) const {
        return {indices_.data() + a * static_cast<std::size_t>(n_modes_),
                static_cast<std::size_t>(n_modes_)};
    }
    [[nodiscard]] int tier(std::size_t a) const { return tiers_[a]; }

    /// Offset of n + e_j, or kNone when that would exceed the depth.
    [[nodiscard]] std::ptrdiff_t raise(std::size_t a, int j) const {
        return up_[a * static_cast<std::size_t>(n_modes_) + static_cast<std::size_t>(j)];
    }
    /// Offset of n - e_j, or kNone when n_j == 0.
    [[nodiscard]] std::ptrdiff_t lower(std::size_t a, int j) const {
        return down_[a * static_cast<std::size_t>(n_modes_) + static_cast<std::size_t>(j)];
    }

    [[nodiscard]] std::optional<std::size_t> find(std::span<const std::uint8_t> n) const;

private:
    std::size_t rank(std::span<const std::uint8_t> n) const;

    int n_modes_;
    int depth_;
    std::vector<std::uint8_t> indices_;
    std::vector<int> tiers_;
    std::vector<std::ptrdiff_t> up_;
    std::vector<std::ptrdiff_t> down_;
    // binom_[m][t] = number of compositions of t into m nonnegative parts
    std::vector<std::vector<std::size_t>> binom_;
    std::vector<std::size_t> tier_offset_;
};

/// One d x d complex matrix per multi-index, stored contiguously column-major.
class AdoStore {
public:
    using MatrixMap = Eigen::Map<CMatrix>;
    using ConstMatrixMap = Eigen::Map<const CMatrix>;

    AdoStore(std::shared_ptr<const Hierarchy> hierarchy, int dim);

    [[nodiscard]] const Hierarchy& hierarchy() const noexcept { return *hierarchy_; }
    [[nodiscard]] std::shared_ptr<const Hierarchy> shared_hierarchy() const noexcept { return hierarchy_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return hierarchy_->size(); }

    MatrixMap ado(std::size_t a) { return {data_.data() + a * block(), dim_, dim_}; }
    [[nodiscard]] ConstMatrixMap ado(std::size_t a) const { return {data_.data() + a * block(), dim_, dim_}; }

    std::span<cplx> data() noexcept { return data_; }
    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }

    void set_zero();
    [[nodiscard]] double max_abs() const;

private:
    [[nodiscard]] std::size_t block() const noexcept { return static_cast<std::size_t>(dim_) * static_cast<std::size_t>(dim_); }

    std::shared_ptr<const Hierarchy> hierarchy_;
    int dim_;
    std::vector<cplx> data_;
};

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{4} << 30;  // bytes

/// Empty (zeroed) store for n_baths * (K + 1) modes truncated at depth L.
/// Throws hhdeco::NumericalError when the ADO storage would exceed memory_cap bytes.
AdoStore build_hierarchy(int n_baths, int K, int L, int dim = 4,
                         std::size_t memory_cap = kDefaultMemoryCap);

} // namespace hhdeco::heom
