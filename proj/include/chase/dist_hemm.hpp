#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chase/dense_matrix.hpp"
#include "chase/grid.hpp"

namespace chase::hemm
{

/// V: 1D over row communicators, rank (i, j) holds rows of column-block j.
/// W: 1D over column communicators, rank (i, j) holds rows of row-block i.
enum class Layout
{
    V,
    W
};

/// Tall n x k operand split per layout; `pieces` is indexed by rank and the
/// pieces of ranks sharing a layout block are replicas of each other.
struct DistributedOperand
{
    Layout layout = Layout::V;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<DenseMatrix> pieces;

    std::size_t local_elements(std::size_t rank) const { return pieces.at(rank).size(); }
};

/// Symmetric matrix distributed in 2D blocks over the simulated rank grid,
/// carrying the diagonal shift currently applied to it.
class DistributedMatrix
{
  public:
    DistributedMatrix(const DenseMatrix& a, grid::Grid grid);

    const grid::Grid& grid() const noexcept { return grid_; }
    const grid::GridTopology& topology() const noexcept { return grid_.topology; }
    const grid::BlockMap& map() const noexcept { return grid_.map; }
    std::size_t order() const noexcept { return grid_.map.n; }

    std::span<const DenseMatrix> blocks() const noexcept { return blocks_; }
    const DenseMatrix& block(std::size_t rank) const { return blocks_.at(rank); }
    const grid::DeviceMap& device_map(std::size_t rank) const { return device_maps_.at(rank); }

    /// Accumulated shift gamma: blocks hold A - gamma I.
    double shift() const noexcept { return gamma_; }

    /// gamma += delta_gamma. Only entries on the global diagonal change and
    /// they are recomputed from the unshifted values, so shifts never drift.
    void apply_shift(double delta_gamma);

    /// Reassembled (currently shifted) matrix.
    DenseMatrix gather() const;

    grid::CommStats& stats() const noexcept { return stats_; }

    std::size_t local_elements(std::size_t rank) const { return blocks_.at(rank).size(); }

  private:
    grid::Grid grid_;
    std::vector<DenseMatrix> blocks_;
    std::vector<grid::DeviceMap> device_maps_;
    // (local row, local col, unshifted value) of each diagonal-crossing entry per rank
    struct DiagEntry
    {
        std::size_t i;
        std::size_t j;
        double value;
    };
    std::vector<std::vector<DiagEntry>> diagonal_;
    double gamma_ = 0.0;
    mutable grid::CommStats stats_;
};

/// Each rank slices its piece from a replicated tall matrix (no communication).
DistributedOperand distribute(ConstMatrixView x, const grid::Grid& grid, Layout layout);
inline DistributedOperand distribute(const DenseMatrix& x, const grid::Grid& grid, Layout layout)
{
    return distribute(x.view(), grid, layout);
}

/// Zero operand of the given shape and layout.
DistributedOperand make_operand(const grid::Grid& grid, Layout layout, std::size_t cols);

/// Gathers the full tall matrix via broadcast within one communicator.
DenseMatrix assemble(const DistributedOperand& x, const grid::Grid& grid, grid::CommStats* stats = nullptr);
/// Same, written into `out` (n x cols) without a temporary.
void assemble_into(const DistributedOperand& x, const grid::Grid& grid, MatrixView out,
                   grid::CommStats* stats = nullptr);

/// Re-expresses x in the other layout. Counted in CommStats::redistribution_count;
/// the alternating filter never needs it.
DistributedOperand redistribute(const DistributedOperand& x, const grid::Grid& grid, Layout target,
                                grid::CommStats* stats = nullptr);

/// True when every replica within each layout group is bitwise identical.
bool replicas_consistent(const DistributedOperand& x, const grid::Grid& grid);

enum class Form
{
    Forward, // block * x
    Backward // block^T * x
};

/// c <- alpha * op(block) * x + beta * c on one rank, tiled over the device
/// grid. Partial tile products are reduced in ascending tile order; a 1x1
/// device grid is a single gemm call.
void device_hemm(double alpha, ConstMatrixView block, ConstMatrixView x, double beta, MatrixView c,
                 const grid::DeviceMap& devices, Form form, grid::CommStats* stats = nullptr);

/// Y <- alpha * (A - gamma I) * X + beta * Y on columns [col0, col0 + ncols),
/// X in V-layout, Y in W-layout. Partial products are summed along each row
/// communicator and the sum replicated to its members.
void hemm_forward(const DistributedMatrix& a, const DistributedOperand& x, DistributedOperand& y, double alpha,
                  double beta, std::size_t col0 = 0, std::size_t ncols = static_cast<std::size_t>(-1));

/// Y <- alpha * (A - gamma I)^T * X + beta * Y, X in W-layout, Y in V-layout;
/// the transpose lets X be used where it already lives.
void hemm_backward(const DistributedMatrix& a, const DistributedOperand& x, DistributedOperand& y, double alpha,
                   double beta, std::size_t col0 = 0, std::size_t ncols = static_cast<std::size_t>(-1));

/// (A - gamma I) * X for a replicated tall X: distribute, forward, assemble.
DenseMatrix apply(const DistributedMatrix& a, const DenseMatrix& x);

/// apply() into a caller buffer. Returns the largest per-rank element count of
/// the transient V and W pieces.
std::size_t apply_into(const DistributedMatrix& a, ConstMatrixView x, MatrixView out);

} // namespace chase::hemm
