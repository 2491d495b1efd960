#include "chase/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "chase/errors.hpp"

namespace chase::grid
{

namespace
{

std::pair<std::size_t, std::size_t> parse_pair(std::string_view text, std::string_view whole)
{
    const auto x = text.find_first_of("xX");
    auto bad = [&] { return InvalidArgument("bad grid shape '" + std::string(whole) + "', expected RxC[:RgxCg]"); };
    if (x == std::string_view::npos)
    {
        throw bad();
    }
    std::size_t a = 0, b = 0;
    auto lhs = text.substr(0, x);
    auto rhs = text.substr(x + 1);
    auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), a);
    auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), b);
    if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
        r2.ptr != rhs.data() + rhs.size() || a == 0 || b == 0)
    {
        throw bad();
    }
    return {a, b};
}

} // namespace

GridTopology parse_grid(std::string_view text)
{
    GridTopology t;
    const auto colon = text.find(':');
    std::tie(t.r, t.c) = parse_pair(text.substr(0, colon), text);
    if (colon != std::string_view::npos)
    {
        std::tie(t.r_g, t.c_g) = parse_pair(text.substr(colon + 1), text);
    }
    return t;
}

std::string to_string(const GridTopology& t)
{
    std::string s = std::to_string(t.r) + "x" + std::to_string(t.c);
    if (t.r_g != 1 || t.c_g != 1)
    {
        s += ":" + std::to_string(t.r_g) + "x" + std::to_string(t.c_g);
    }
    return s;
}

std::pair<std::size_t, std::size_t> auto_shape(std::size_t ranks)
{
    if (ranks == 0)
    {
        throw InvalidArgument("auto_shape: need at least one rank");
    }
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(ranks)));
    while (r * r > ranks)
    {
        --r;
    }
    while (ranks % r != 0)
    {
        --r;
    }
    return {r, ranks / r};
}

std::size_t Partition::max_count() const noexcept
{
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

Partition partition(std::size_t n, std::size_t parts)
{
    if (parts == 0 || n < parts)
    {
        throw ShapeError("partition: cannot split " + std::to_string(n) + " into " + std::to_string(parts) +
                         " non-empty pieces");
    }
    Partition p;
    p.offsets.resize(parts);
    p.counts.resize(parts);
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts; ++k)
    {
        p.offsets[k] = off;
        p.counts[k] = base + (k < extra ? 1 : 0);
        off += p.counts[k];
    }
    return p;
}

DeviceMap make_device_map(std::size_t p, std::size_t q, std::size_t r_g, std::size_t c_g)
{
    return {partition(p, r_g), partition(q, c_g)};
}

Grid make_grid(std::size_t n, std::size_t r, std::size_t c, std::size_t r_g, std::size_t c_g)
{
    if (r == 0 || c == 0 || r_g == 0 || c_g == 0)
    {
        throw ShapeError("make_grid: grid dimensions must be positive");
    }
    if (n < r || n < c)
    {
        throw ShapeError("make_grid: order " + std::to_string(n) + " is smaller than the " + std::to_string(r) +
                         "x" + std::to_string(c) + " grid");
    }
    Grid g;
    g.topology = {r, c, r_g, c_g};
    g.map.n = n;
    g.map.rows = partition(n, r);
    g.map.cols = partition(n, c);
    if (n / r < r_g || n / c < c_g)
    {
        throw ShapeError("make_grid: rank blocks too small for the " + std::to_string(r_g) + "x" +
                         std::to_string(c_g) + " device grid");
    }
    return g;
}

std::vector<DenseMatrix> scatter_symmetric(const DenseMatrix& a, const Grid& grid)
{
    const auto& map = grid.map;
    if (a.rows() != map.n || a.cols() != map.n)
    {
        throw ShapeError("scatter_symmetric: matrix order does not match the block map");
    }
    const auto& t = grid.topology;
    std::vector<DenseMatrix> blocks(t.ranks());
    for (std::size_t j = 0; j < t.c; ++j)
    {
        for (std::size_t i = 0; i < t.r; ++i)
        {
            blocks[t.rank_of(i, j)] = a.submatrix(map.row_offset(i), map.col_offset(j), map.row_count(i),
                                                  map.col_count(j));
        }
    }
    return blocks;
}

DenseMatrix reassemble(std::span<const DenseMatrix> blocks, const Grid& grid)
{
    const auto& map = grid.map;
    const auto& t = grid.topology;
    if (blocks.size() != t.ranks())
    {
        throw ShapeError("reassemble: block count does not match the grid");
    }
    DenseMatrix a(map.n, map.n);
    for (std::size_t j = 0; j < t.c; ++j)
    {
        for (std::size_t i = 0; i < t.r; ++i)
        {
            const auto& b = blocks[t.rank_of(i, j)];
            if (b.rows() != map.row_count(i) || b.cols() != map.col_count(j))
            {
                throw ShapeError("reassemble: block shape does not match the map");
            }
            copy_into(b.view(), a.view().block(map.row_offset(i), map.col_offset(j), b.rows(), b.cols()));
        }
    }
    return a;
}

Group row_group(const GridTopology& t, std::size_t i)
{
    Group g{Group::Kind::Row, i, {}};
    for (std::size_t j = 0; j < t.c; ++j)
    {
        g.ranks.push_back(t.rank_of(i, j));
    }
    return g;
}

Group column_group(const GridTopology& t, std::size_t j)
{
    Group g{Group::Kind::Column, j, {}};
    for (std::size_t i = 0; i < t.r; ++i)
    {
        g.ranks.push_back(t.rank_of(i, j));
    }
    return g;
}

namespace
{

DenseMatrix fold(const std::vector<const DenseMatrix*>& parts)
{
    if (parts.empty())
    {
        throw ShapeError("reduce: empty group");
    }
    DenseMatrix acc = *parts[0];
    for (std::size_t k = 1; k < parts.size(); ++k)
    {
        const auto& p = *parts[k];
        if (p.rows() != acc.rows() || p.cols() != acc.cols())
        {
            throw ShapeError("reduce: contributions differ in shape");
        }
        double* dst = acc.data();
        const double* src = p.data();
        for (std::size_t e = 0; e < acc.size(); ++e)
        {
            dst[e] += src[e];
        }
    }
    return acc;
}

} // namespace

DenseMatrix fixed_order_sum(std::span<const DenseMatrix> parts)
{
    std::vector<const DenseMatrix*> ptrs;
    for (const auto& p : parts)
    {
        ptrs.push_back(&p);
    }
    return fold(ptrs);
}

DenseMatrix reduce_rows(std::span<const DenseMatrix> contributions, const Group& group, CommStats* stats)
{
    std::vector<std::size_t> order = group.ranks;
    std::sort(order.begin(), order.end());
    std::vector<const DenseMatrix*> members;
    members.reserve(order.size());
    for (std::size_t r : order)
    {
        if (r >= contributions.size())
        {
            throw ShapeError("reduce_rows: group member has no contribution");
        }
        members.push_back(&contributions[r]);
    }
    auto sum = fold(members);
    if (stats)
    {
        ++stats->rank_collective_calls;
        stats->rank_bytes_reduced += 8 * sum.size() * order.size();
    }
    return sum;
}

DenseMatrix broadcast_assemble(std::span<const Piece> pieces, std::size_t rows, CommStats* stats)
{
    if (pieces.empty())
    {
        throw ShapeError("broadcast_assemble: no pieces");
    }
    std::vector<const Piece*> sorted;
    for (const auto& p : pieces)
    {
        sorted.push_back(&p);
    }
    std::sort(sorted.begin(), sorted.end(), [](const Piece* a, const Piece* b) { return a->offset < b->offset; });
    const std::size_t cols = sorted.front()->data.cols();
    DenseMatrix out(rows, cols);
    std::size_t next = 0;
    for (const Piece* p : sorted)
    {
        if (p->offset != next)
        {
            throw ShapeError(p->offset > next ? "broadcast_assemble: gap in row partition"
                                              : "broadcast_assemble: overlapping pieces");
        }
        if (p->data.cols() != cols || p->offset + p->data.rows() > rows)
        {
            throw ShapeError("broadcast_assemble: piece does not fit the target");
        }
        copy_into(p->data.view(), out.view().block(p->offset, 0, p->data.rows(), cols));
        next += p->data.rows();
    }
    if (next != rows)
    {
        throw ShapeError("broadcast_assemble: pieces do not cover all rows");
    }
    if (stats)
    {
        ++stats->rank_collective_calls;
    }
    return out;
}

} // namespace chase::grid
