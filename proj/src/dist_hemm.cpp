#include "chase/dist_hemm.hpp"

#include <algorithm>
#include <cstring>

#include "chase/errors.hpp"
#include "chase/linalg.hpp"

namespace chase::hemm
{

using grid::CommStats;
using grid::Grid;

DistributedMatrix::DistributedMatrix(const DenseMatrix& a, Grid grid)
    : grid_(std::move(grid)), blocks_(grid::scatter_symmetric(a, grid_))
{
    const auto& t = grid_.topology;
    const auto& map = grid_.map;
    device_maps_.reserve(t.ranks());
    diagonal_.resize(t.ranks());
    for (std::size_t rank = 0; rank < t.ranks(); ++rank)
    {
        const auto [i, j] = t.coords(rank);
        device_maps_.push_back(grid::make_device_map(map.row_count(i), map.col_count(j), t.r_g, t.c_g));
        const std::size_t r0 = map.row_offset(i);
        const std::size_t c0 = map.col_offset(j);
        const std::size_t lo = std::max(r0, c0);
        const std::size_t hi = std::min(r0 + map.row_count(i), c0 + map.col_count(j));
        for (std::size_t g = lo; g < hi; ++g)
        {
            diagonal_[rank].push_back({g - r0, g - c0, blocks_[rank](g - r0, g - c0)});
        }
    }
}

void DistributedMatrix::apply_shift(double delta_gamma)
{
    gamma_ += delta_gamma;
    for (std::size_t rank = 0; rank < blocks_.size(); ++rank)
    {
        for (const auto& d : diagonal_[rank])
        {
            blocks_[rank](d.i, d.j) = d.value - gamma_;
        }
    }
}

DenseMatrix DistributedMatrix::gather() const { return grid::reassemble(blocks_, grid_); }

namespace
{

struct RowRange
{
    std::size_t offset;
    std::size_t count;
};

RowRange piece_rows(const Grid& g, Layout layout, std::size_t rank)
{
    const auto [i, j] = g.topology.coords(rank);
    if (layout == Layout::V)
    {
        return {g.map.col_offset(j), g.map.col_count(j)};
    }
    return {g.map.row_offset(i), g.map.row_count(i)};
}

void check_operand(const DistributedOperand& x, const Grid& g, Layout expected, const char* who)
{
    if (x.layout != expected)
    {
        throw LayoutError(std::string(who) + ": operand is in the wrong layout");
    }
    if (x.rows != g.map.n || x.pieces.size() != g.topology.ranks())
    {
        throw ShapeError(std::string(who) + ": operand does not match the grid");
    }
}

std::size_t clamp_cols(std::size_t total, std::size_t col0, std::size_t ncols, const char* who)
{
    if (col0 > total)
    {
        throw ShapeError(std::string(who) + ": column offset out of range");
    }
    const std::size_t nc = std::min(ncols, total - col0);
    return nc;
}

} // namespace

DistributedOperand distribute(ConstMatrixView x, const Grid& g, Layout layout)
{
    if (x.rows != g.map.n)
    {
        throw ShapeError("distribute: row count does not match matrix order");
    }
    DistributedOperand op{layout, x.rows, x.cols, {}};
    op.pieces.reserve(g.topology.ranks());
    for (std::size_t rank = 0; rank < g.topology.ranks(); ++rank)
    {
        const auto rr = piece_rows(g, layout, rank);
        op.pieces.push_back(to_matrix(x.block(rr.offset, 0, rr.count, x.cols)));
    }
    return op;
}

DistributedOperand make_operand(const Grid& g, Layout layout, std::size_t cols)
{
    DistributedOperand op{layout, g.map.n, cols, {}};
    op.pieces.reserve(g.topology.ranks());
    for (std::size_t rank = 0; rank < g.topology.ranks(); ++rank)
    {
        op.pieces.emplace_back(piece_rows(g, layout, rank).count, cols);
    }
    return op;
}

void assemble_into(const DistributedOperand& x, const Grid& g, MatrixView out, CommStats* stats)
{
    if (out.rows != x.rows || out.cols != x.cols)
    {
        throw ShapeError("assemble_into: output shape mismatch");
    }
    const auto& t = g.topology;
    const grid::Group group = x.layout == Layout::V ? grid::row_group(t, 0) : grid::column_group(t, 0);
    std::size_t next = 0;
    for (std::size_t rank : group.ranks)
    {
        const auto rr = piece_rows(g, x.layout, rank);
        const auto& piece = x.pieces.at(rank);
        if (rr.offset != next || piece.rows() != rr.count || piece.cols() != x.cols)
        {
            throw ShapeError("assemble_into: pieces do not tile the operand");
        }
        copy_into(piece.view(), out.block(rr.offset, 0, rr.count, x.cols));
        next += rr.count;
    }
    if (stats)
    {
        ++stats->rank_collective_calls;
    }
}

DenseMatrix assemble(const DistributedOperand& x, const Grid& g, CommStats* stats)
{
    // V pieces are assembled along grid row 0, W pieces along grid column 0.
    const auto& t = g.topology;
    const grid::Group group = x.layout == Layout::V ? grid::row_group(t, 0) : grid::column_group(t, 0);
    std::vector<grid::Piece> pieces;
    pieces.reserve(group.ranks.size());
    for (std::size_t rank : group.ranks)
    {
        pieces.push_back({piece_rows(g, x.layout, rank).offset, x.pieces.at(rank)});
    }
    return grid::broadcast_assemble(pieces, x.rows, stats);
}

DistributedOperand redistribute(const DistributedOperand& x, const Grid& g, Layout target, CommStats* stats)
{
    if (stats)
    {
        ++stats->redistribution_count;
    }
    if (x.layout == target)
    {
        return x;
    }
    return distribute(assemble(x, g), g, target);
}

bool replicas_consistent(const DistributedOperand& x, const Grid& g)
{
    const auto& t = g.topology;
    for (std::size_t rank = 0; rank < t.ranks(); ++rank)
    {
        const auto [i, j] = t.coords(rank);
        const std::size_t ref = x.layout == Layout::V ? t.rank_of(0, j) : t.rank_of(i, 0);
        const auto& a = x.pieces[rank];
        const auto& b = x.pieces[ref];
        if (a.rows() != b.rows() || a.cols() != b.cols() ||
            std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) != 0)
        {
            return false;
        }
    }
    return true;
}

void device_hemm(double alpha, ConstMatrixView block, ConstMatrixView x, double beta, MatrixView c,
                 const grid::DeviceMap& devices, Form form, CommStats* stats)
{
    const auto op = form == Form::Forward ? core::Op::NoTrans : core::Op::Trans;
    const auto& drows = devices.rows;
    const auto& dcols = devices.cols;
    if (drows.total() != block.rows || dcols.total() != block.cols)
    {
        throw ShapeError("device_hemm: device map does not tile the rank block");
    }
    if (drows.parts() == 1 && dcols.parts() == 1)
    {
        core::gemm(alpha, block, op, x, beta, c);
        return;
    }

    // Forward: output tile-row a sums tiles (a, b) over b.
    // Backward: output tile-row b sums tiles (a, b)^T over a.
    const auto& out_part = form == Form::Forward ? drows : dcols;
    const auto& sum_part = form == Form::Forward ? dcols : drows;
    if (x.rows != sum_part.total() || c.rows != out_part.total() || x.cols != c.cols)
    {
        throw ShapeError("device_hemm: operand shapes do not conform");
    }
    DenseMatrix acc;
    DenseMatrix partial;
    for (std::size_t o = 0; o < out_part.parts(); ++o)
    {
        const std::size_t orow = out_part.offsets[o];
        const std::size_t ocnt = out_part.counts[o];
        acc = DenseMatrix(ocnt, x.cols);
        partial = DenseMatrix(ocnt, x.cols);
        for (std::size_t s = 0; s < sum_part.parts(); ++s)
        {
            const std::size_t srow = sum_part.offsets[s];
            const std::size_t scnt = sum_part.counts[s];
            const auto tile = form == Form::Forward ? block.block(orow, srow, ocnt, scnt)
                                                    : block.block(srow, orow, scnt, ocnt);
            core::gemm(1.0, tile, op, x.block(srow, 0, scnt, x.cols), 0.0, s == 0 ? acc.view() : partial.view());
            if (s > 0)
            {
                double* dst = acc.data();
                const double* src = partial.data();
                for (std::size_t e = 0; e < acc.size(); ++e)
                {
                    dst[e] += src[e];
                }
            }
        }
        if (stats)
        {
            ++stats->device_reduction_calls;
        }
        for (std::size_t jcol = 0; jcol < c.cols; ++jcol)
        {
            double* cj = c.col(jcol) + orow;
            const double* aj = acc.col(jcol).data();
            for (std::size_t r = 0; r < ocnt; ++r)
            {
                cj[r] = beta == 0.0 ? alpha * aj[r] : beta * cj[r] + alpha * aj[r];
            }
        }
    }
}

namespace
{

// Shared body of the two HEMM forms. `forward` selects the grid direction:
// forward reduces along row communicators into W pieces, backward along
// column communicators into V pieces.
void hemm_impl(const DistributedMatrix& a, const DistributedOperand& x, DistributedOperand& y, double alpha,
               double beta, std::size_t col0, std::size_t ncols, bool forward)
{
    const char* who = forward ? "hemm_forward" : "hemm_backward";
    const Grid& g = a.grid();
    check_operand(x, g, forward ? Layout::V : Layout::W, who);
    check_operand(y, g, forward ? Layout::W : Layout::V, who);
    if (x.cols != y.cols)
    {
        throw ShapeError(std::string(who) + ": operand column counts differ");
    }
    const std::size_t nc = clamp_cols(x.cols, col0, ncols, who);
    if (nc == 0)
    {
        return;
    }

    const auto& t = g.topology;
    auto& stats = a.stats();
    std::vector<DenseMatrix> contributions(t.ranks());
    for (std::size_t rank = 0; rank < t.ranks(); ++rank)
    {
        const auto [i, j] = t.coords(rank);
        // The first member of each group folds in beta * Y; the rest add pure products.
        const bool leader = forward ? (j == 0) : (i == 0);
        const auto& ypiece = y.pieces[rank];
        DenseMatrix& contrib = contributions[rank];
        if (leader)
        {
            contrib = ypiece.submatrix(0, col0, ypiece.rows(), nc);
        }
        else
        {
            contrib = DenseMatrix(ypiece.rows(), nc);
        }
        device_hemm(alpha, a.block(rank).view(), x.pieces[rank].columns(col0, nc), leader ? beta : 0.0,
                    contrib.view(), a.device_map(rank), forward ? Form::Forward : Form::Backward, &stats);
    }

    const std::size_t ngroups = forward ? t.r : t.c;
    for (std::size_t gi = 0; gi < ngroups; ++gi)
    {
        const grid::Group group = forward ? grid::row_group(t, gi) : grid::column_group(t, gi);
        const DenseMatrix sum = grid::reduce_rows(contributions, group, &stats);
        for (std::size_t rank : group.ranks)
        {
            copy_into(sum.view(), y.pieces[rank].columns(col0, nc));
        }
    }
    stats.matvec_count += nc;
}

} // namespace

void hemm_forward(const DistributedMatrix& a, const DistributedOperand& x, DistributedOperand& y, double alpha,
                  double beta, std::size_t col0, std::size_t ncols)
{
    hemm_impl(a, x, y, alpha, beta, col0, ncols, true);
}

void hemm_backward(const DistributedMatrix& a, const DistributedOperand& x, DistributedOperand& y, double alpha,
                   double beta, std::size_t col0, std::size_t ncols)
{
    hemm_impl(a, x, y, alpha, beta, col0, ncols, false);
}

std::size_t apply_into(const DistributedMatrix& a, ConstMatrixView x, MatrixView out)
{
    const auto vx = distribute(x, a.grid(), Layout::V);
    auto wy = make_operand(a.grid(), Layout::W, x.cols);
    hemm_forward(a, vx, wy, 1.0, 0.0);
    assemble_into(wy, a.grid(), out, &a.stats());
    std::size_t peak = 0;
    for (std::size_t rank = 0; rank < vx.pieces.size(); ++rank)
    {
        peak = std::max(peak, vx.local_elements(rank) + wy.local_elements(rank));
    }
    return peak;
}

DenseMatrix apply(const DistributedMatrix& a, const DenseMatrix& x)
{
    const auto vx = distribute(x, a.grid(), Layout::V);
    auto wy = make_operand(a.grid(), Layout::W, x.cols());
    hemm_forward(a, vx, wy, 1.0, 0.0);
    return assemble(wy, a.grid(), &a.stats());
}

} // namespace chase::hemm
