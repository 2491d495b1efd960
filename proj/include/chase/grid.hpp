#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chase/dense_matrix.hpp"

namespace chase::grid
{

/// r x c rank grid (ranks numbered column-major) with an optional r_g x c_g
/// device grid nested in every rank.
struct GridTopology
{
    std::size_t r = 1;
    std::size_t c = 1;
    std::size_t r_g = 1;
    std::size_t c_g = 1;

    std::size_t ranks() const noexcept { return r * c; }
    std::size_t rank_of(std::size_t i, std::size_t j) const noexcept { return i + j * r; }
    std::pair<std::size_t, std::size_t> coords(std::size_t rank) const noexcept { return {rank % r, rank / r}; }

    friend bool operator==(const GridTopology&, const GridTopology&) = default;
};

/// Parses "RxC" or "RxC:RgxCg".
GridTopology parse_grid(std::string_view text);
std::string to_string(const GridTopology& t);

/// Most-square r x c with r * c == ranks and r <= c.
std::pair<std::size_t, std::size_t> auto_shape(std::size_t ranks);

/// Contiguous split of [0, n) into `parts` pieces; the first n % parts pieces
/// get one extra element.
struct Partition
{
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> counts;

    std::size_t parts() const noexcept { return counts.size(); }
    std::size_t total() const noexcept { return offsets.empty() ? 0 : offsets.back() + counts.back(); }
    std::size_t max_count() const noexcept;
};

Partition partition(std::size_t n, std::size_t parts);

/// 2D block layout of an order-n matrix over the rank grid.
struct BlockMap
{
    std::size_t n = 0;
    Partition rows; // over grid rows i
    Partition cols; // over grid columns j

    std::size_t row_offset(std::size_t i) const { return rows.offsets[i]; }
    std::size_t row_count(std::size_t i) const { return rows.counts[i]; }
    std::size_t col_offset(std::size_t j) const { return cols.offsets[j]; }
    std::size_t col_count(std::size_t j) const { return cols.counts[j]; }
};

/// Tiling of one p x q rank block across the device grid.
struct DeviceMap
{
    Partition rows; // over device rows
    Partition cols; // over device columns
};

DeviceMap make_device_map(std::size_t p, std::size_t q, std::size_t r_g, std::size_t c_g);

struct Grid
{
    GridTopology topology;
    BlockMap map;
};

/// Throws ShapeError when a dimension cannot host at least one row/column per
/// rank (and per device).
Grid make_grid(std::size_t n, std::size_t r, std::size_t c, std::size_t r_g = 1, std::size_t c_g = 1);

/// Per-rank blocks, indexed by rank number.
std::vector<DenseMatrix> scatter_symmetric(const DenseMatrix& a, const Grid& grid);
DenseMatrix reassemble(std::span<const DenseMatrix> blocks, const Grid& grid);

/// Communicator: the ranks of one grid row (`Row`) or one grid column (`Column`),
/// listed in ascending rank order.
struct Group
{
    enum class Kind
    {
        Row,
        Column
    };
    Kind kind;
    std::size_t index;
    std::vector<std::size_t> ranks;
};

Group row_group(const GridTopology& t, std::size_t i);
Group column_group(const GridTopology& t, std::size_t j);

/// Simulation instrumentation.
struct CommStats
{
    std::uint64_t rank_collective_calls = 0;
    std::uint64_t rank_bytes_reduced = 0;
    std::uint64_t device_reduction_calls = 0;
    std::uint64_t matvec_count = 0;
    /// V-layout <-> W-layout conversions. Must stay zero inside a filter sweep.
    std::uint64_t redistribution_count = 0;

    friend bool operator==(const CommStats&, const CommStats&) = default;
};

/// Sum of the group members' contributions, folded left-to-right in ascending
/// rank order. `contributions` is indexed by rank; members outside `group`
/// are ignored.
DenseMatrix reduce_rows(std::span<const DenseMatrix> contributions, const Group& group, CommStats* stats = nullptr);

/// Fixed-order sum of a plain list (the device-level counterpart).
DenseMatrix fixed_order_sum(std::span<const DenseMatrix> parts);

/// One row-piece of a tall matrix, placed at `offset`.
struct Piece
{
    std::size_t offset;
    DenseMatrix data;
};

/// Concatenates pieces that must tile [0, rows) exactly; the result is what
/// every member of the group holds after the broadcast.
DenseMatrix broadcast_assemble(std::span<const Piece> pieces, std::size_t rows, CommStats* stats = nullptr);

} // namespace chase::grid
