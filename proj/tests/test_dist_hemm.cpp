#include <gtest/gtest.h>

#include "chase/dist_hemm.hpp"
#include "chase/errors.hpp"
#include "chase/linalg.hpp"
#include "oracle.hpp"

using namespace chase;
using namespace chase::hemm;

namespace
{

DenseMatrix shifted(DenseMatrix a, double gamma)
{
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        a(i, i) -= gamma;
    }
    return a;
}

} // namespace

TEST(Shift, ZeroIsNoOp)
{
    const auto a = chase::testing::random_symmetric(9, 1);
    DistributedMatrix d(a, grid::make_grid(9, 2, 3));
    d.apply_shift(0.0);
    EXPECT_EQ(d.gather(), a);
}

TEST(Shift, IdentityMinusOneIsZero)
{
    DistributedMatrix d(DenseMatrix::identity(4), grid::make_grid(4, 2, 2));
    d.apply_shift(1.0);
    EXPECT_EQ(d.gather(), DenseMatrix(4, 4));
    EXPECT_EQ(d.shift(), 1.0);
}

TEST(Shift, RoundTripIsBitwise)
{
    const auto a = chase::testing::random_symmetric(11, 2);
    for (auto [r, c] : {std::pair{1, 1}, {3, 2}, {4, 4}})
    {
        DistributedMatrix d(a, grid::make_grid(11, r, c));
        d.apply_shift(0.5);
        EXPECT_EQ(d.gather(), shifted(a, 0.5));
        d.apply_shift(-0.5);
        EXPECT_EQ(d.gather(), a);
        // Irrational-looking shifts also come back exactly: values are recomputed, not accumulated.
        d.apply_shift(0.1);
        d.apply_shift(0.2);
        d.apply_shift(-0.30000000000000004);
        EXPECT_EQ(d.gather(), a);
    }
}

TEST(Forward, IdentityConvertsLayout)
{
    const auto g = grid::make_grid(7, 3, 2);
    DistributedMatrix d(DenseMatrix::identity(7), g);
    const auto x = GaussianStream(3).matrix(7, 2);
    auto vx = distribute(x, g, Layout::V);
    auto wy = make_operand(g, Layout::W, 2);
    hemm_forward(d, vx, wy, 1.0, 0.0);
    EXPECT_EQ(assemble(wy, g), x);
    const auto expected = distribute(x, g, Layout::W);
    for (std::size_t rank = 0; rank < g.topology.ranks(); ++rank)
    {
        EXPECT_EQ(wy.pieces[rank], expected.pieces[rank]);
    }
}

TEST(Forward, SingleRankIsLocalGemm)
{
    const auto a = chase::testing::random_symmetric(10, 4);
    const auto g = grid::make_grid(10, 1, 1);
    DistributedMatrix d(a, g);
    const auto x = GaussianStream(5).matrix(10, 3);
    const auto y0 = GaussianStream(6).matrix(10, 3);
    auto vx = distribute(x, g, Layout::V);
    auto wy = distribute(y0, g, Layout::W);
    hemm_forward(d, vx, wy, 0.5, -2.0);
    EXPECT_EQ(assemble(wy, g), core::local_gemm(0.5, a, false, x, -2.0, y0));

    auto vy = distribute(y0, g, Layout::V);
    auto wx = distribute(x, g, Layout::W);
    hemm_backward(d, wx, vy, 0.5, -2.0);
    EXPECT_EQ(assemble(vy, g), core::local_gemm(0.5, a, true, x, -2.0, y0));
}

TEST(Forward, MatchesSerialOnThreeByTwo)
{
    const auto a = chase::testing::random_symmetric(6, 7);
    const auto g = grid::make_grid(6, 3, 2);
    DistributedMatrix d(a, g);
    const auto x = GaussianStream(8).matrix(6, 2);
    auto vx = distribute(x, g, Layout::V);
    auto wy = make_operand(g, Layout::W, 2);
    hemm_forward(d, vx, wy, 1.0, 0.0);
    EXPECT_LT(chase::testing::rel_frobenius(assemble(wy, g), core::multiply(a, x)), 1e-13);
}

TEST(Backward, SquareViaAlternation)
{
    const auto a = chase::testing::random_symmetric(6, 9);
    const auto g = grid::make_grid(6, 3, 2);
    DistributedMatrix d(a, g);
    const auto x = GaussianStream(10).matrix(6, 2);
    auto v = distribute(x, g, Layout::V);
    auto w = make_operand(g, Layout::W, 2);
    hemm_forward(d, v, w, 1.0, 0.0);
    hemm_backward(d, w, v, 1.0, 0.0);
    const auto ref = core::multiply(a, core::multiply(a, x));
    EXPECT_LT(chase::testing::rel_frobenius(assemble(v, g), ref), 1e-12);
    EXPECT_EQ(d.stats().redistribution_count, 0u);
}

TEST(Backward, IdentityConvertsLayout)
{
    const auto g = grid::make_grid(9, 2, 4);
    DistributedMatrix d(DenseMatrix::identity(9), g);
    const auto x = GaussianStream(11).matrix(9, 3);
    auto wx = distribute(x, g, Layout::W);
    auto vy = make_operand(g, Layout::V, 3);
    hemm_backward(d, wx, vy, 1.0, 0.0);
    EXPECT_EQ(assemble(vy, g), x);
}

TEST(Layouts, WrongLayoutRejected)
{
    const auto g = grid::make_grid(6, 2, 3);
    DistributedMatrix d(DenseMatrix::identity(6), g);
    auto v = make_operand(g, Layout::V, 1);
    auto w = make_operand(g, Layout::W, 1);
    EXPECT_THROW(hemm_forward(d, w, v, 1.0, 0.0), LayoutError);
    EXPECT_THROW(hemm_backward(d, v, w, 1.0, 0.0), LayoutError);
}

TEST(Layouts, ReplicasIdenticalAfterEachProduct)
{
    const auto a = chase::testing::random_symmetric(13, 12);
    const auto g = grid::make_grid(13, 3, 4, 2, 2);
    DistributedMatrix d(a, g);
    auto v = distribute(GaussianStream(13).matrix(13, 4), g, Layout::V);
    auto w = make_operand(g, Layout::W, 4);
    EXPECT_TRUE(replicas_consistent(v, g));
    for (int step = 0; step < 3; ++step)
    {
        hemm_forward(d, v, w, 0.3, 0.7);
        EXPECT_TRUE(replicas_consistent(w, g));
        hemm_backward(d, w, v, 0.3, 0.7);
        EXPECT_TRUE(replicas_consistent(v, g));
    }
}

TEST(Layouts, PartialColumnRange)
{
    const auto a = chase::testing::random_symmetric(8, 14);
    const auto g = grid::make_grid(8, 2, 2);
    DistributedMatrix d(a, g);
    const auto x = GaussianStream(15).matrix(8, 4);
    const auto y0 = GaussianStream(16).matrix(8, 4);
    auto v = distribute(x, g, Layout::V);
    auto w = distribute(y0, g, Layout::W);
    hemm_forward(d, v, w, 1.0, 1.0, 1, 2);
    const auto got = assemble(w, g);
    const auto full = core::local_gemm(1.0, a, false, x, 1.0, y0);
    for (std::size_t j = 0; j < 4; ++j)
    {
        for (std::size_t i = 0; i < 8; ++i)
        {
            const double ref = (j == 1 || j == 2) ? full(i, j) : y0(i, j);
            EXPECT_NEAR(got(i, j), ref, 1e-13);
        }
    }
    EXPECT_EQ(d.stats().matvec_count, 2u);
}

TEST(Device, SingleTileIsBitwiseGemm)
{
    const auto block = GaussianStream(17).matrix(5, 7);
    const auto x = GaussianStream(18).matrix(7, 3);
    DenseMatrix c(5, 3);
    device_hemm(1.0, block.view(), x.view(), 0.0, c.view(), grid::make_device_map(5, 7, 1, 1), Form::Forward);
    EXPECT_EQ(c, core::multiply(block, x));
}

TEST(Device, TwoByThreeTiles)
{
    const auto block = GaussianStream(19).matrix(6, 6);
    const auto x = GaussianStream(20).matrix(6, 2);
    grid::CommStats s;
    DenseMatrix c(6, 2);
    device_hemm(1.0, block.view(), x.view(), 0.0, c.view(), grid::make_device_map(6, 6, 2, 3), Form::Forward, &s);
    EXPECT_LT(chase::testing::rel_frobenius(c, core::multiply(block, x)), 1e-13);
    EXPECT_GT(s.device_reduction_calls, 0u);
    DenseMatrix cb(6, 2);
    device_hemm(1.0, block.view(), x.view(), 0.0, cb.view(), grid::make_device_map(6, 6, 2, 3), Form::Backward);
    EXPECT_LT(chase::testing::rel_frobenius(cb, core::multiply(block, x, core::Op::Trans)), 1e-13);
}

TEST(Device, ZeroInputZeroOutput)
{
    const auto block = GaussianStream(21).matrix(6, 4);
    DenseMatrix c(6, 2);
    device_hemm(1.0, block.view(), DenseMatrix(4, 2).view(), 0.0, c.view(), grid::make_device_map(6, 4, 2, 2),
                Form::Forward);
    EXPECT_EQ(c, DenseMatrix(6, 2));
}

TEST(Device, MismatchedMapRejected)
{
    const auto block = GaussianStream(22).matrix(6, 4);
    DenseMatrix c(6, 2);
    EXPECT_THROW(device_hemm(1.0, block.view(), DenseMatrix(4, 2).view(), 0.0, c.view(),
                             grid::make_device_map(5, 4, 1, 1), Form::Forward),
                 ShapeError);
}

TEST(Serial, RandomGridsAgreeWithReference)
{
    GaussianStream pick(23);
    for (int trial = 0; trial < 40; ++trial)
    {
        const std::size_t r = 1 + std::size_t(pick.uniform() * 4) % 4;
        const std::size_t c = 1 + std::size_t(pick.uniform() * 4) % 4;
        const std::size_t rg = 1 + std::size_t(pick.uniform() * 2) % 2;
        const std::size_t cg = 1 + std::size_t(pick.uniform() * 2) % 2;
        const std::size_t n = 16 + std::size_t(pick.uniform() * 185) % 185;
        const std::size_t k = 1 + std::size_t(pick.uniform() * 32) % 32;
        const auto a = chase::testing::random_symmetric(n, 100 + trial);
        const auto g = grid::make_grid(n, r, c, rg, cg);
        DistributedMatrix d(a, g);
        d.apply_shift(0.25);
        const auto x = GaussianStream(200 + trial).matrix(n, k);
        auto v = distribute(x, g, Layout::V);
        auto w = make_operand(g, Layout::W, k);
        hemm_forward(d, v, w, 1.0, 0.0);
        const auto ref_w = core::multiply(shifted(a, 0.25), x);
        EXPECT_LT(chase::testing::rel_frobenius(assemble(w, g), ref_w), 1e-12) << grid::to_string(g.topology);
        hemm_backward(d, w, v, 1.0, 0.0);
        EXPECT_LT(chase::testing::rel_frobenius(assemble(v, g), core::multiply(shifted(a, 0.25), ref_w)), 1e-12);
    }
}

TEST(Redistribute, CountedAndCorrect)
{
    const auto g = grid::make_grid(10, 2, 3);
    const auto x = GaussianStream(24).matrix(10, 2);
    grid::CommStats s;
    const auto w = redistribute(distribute(x, g, Layout::V), g, Layout::W, &s);
    EXPECT_EQ(s.redistribution_count, 1u);
    EXPECT_EQ(w.layout, Layout::W);
    EXPECT_EQ(assemble(w, g), x);
}

TEST(Apply, IntoBufferMatchesReference)
{
    const auto a = chase::testing::random_symmetric(30, 25);
    const auto g = grid::make_grid(30, 3, 3);
    DistributedMatrix d(a, g);
    const auto x = GaussianStream(26).matrix(30, 5);
    DenseMatrix out(30, 5);
    const auto peak = apply_into(d, x.view(), out.view());
    EXPECT_LT(chase::testing::rel_frobenius(out, core::multiply(a, x)), 1e-13);
    EXPECT_EQ(peak, 2u * 10 * 5);
    EXPECT_EQ(apply(d, x), out);
}
