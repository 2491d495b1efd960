#include "chase/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "chase/errors.hpp"

namespace chase::core
{

namespace
{

constexpr std::size_t kColBlock = 8;
constexpr std::size_t kRowBlock = 128;

std::atomic<unsigned> g_threads{1};

// acc[jj][i] += sum_k a(i, k) * b(k, jj) for one row block and up to kColBlock
// columns; `a` has leading dimension lda, b column jj starts at b + jj * ldb.
void accumulate_block(const double* a, std::size_t lda, std::size_t mb, std::size_t kdim, const double* b,
                      std::size_t ldb, std::size_t nb, double (&acc)[kColBlock][kRowBlock])
{
    for (std::size_t jj = 0; jj < nb; ++jj)
    {
        std::fill_n(acc[jj], mb, 0.0);
    }
    if (nb == kColBlock)
    {
        for (std::size_t k = 0; k < kdim; ++k)
        {
            const double* ak = a + k * lda;
            const double b0 = b[k], b1 = b[k + ldb], b2 = b[k + 2 * ldb], b3 = b[k + 3 * ldb];
            const double b4 = b[k + 4 * ldb], b5 = b[k + 5 * ldb], b6 = b[k + 6 * ldb], b7 = b[k + 7 * ldb];
            for (std::size_t i = 0; i < mb; ++i)
            {
                const double ai = ak[i];
                acc[0][i] += ai * b0;
                acc[1][i] += ai * b1;
                acc[2][i] += ai * b2;
                acc[3][i] += ai * b3;
                acc[4][i] += ai * b4;
                acc[5][i] += ai * b5;
                acc[6][i] += ai * b6;
                acc[7][i] += ai * b7;
            }
        }
        return;
    }
    for (std::size_t k = 0; k < kdim; ++k)
    {
        const double* ak = a + k * lda;
        for (std::size_t jj = 0; jj < nb; ++jj)
        {
            const double bk = b[k + jj * ldb];
            double* accj = acc[jj];
            for (std::size_t i = 0; i < mb; ++i)
            {
                accj[i] += ak[i] * bk;
            }
        }
    }
}

void store_block(double alpha, double beta, const double (&acc)[kColBlock][kRowBlock], std::size_t mb,
                 std::size_t nb, MatrixView c, std::size_t i0, std::size_t j0)
{
    for (std::size_t jj = 0; jj < nb; ++jj)
    {
        double* cj = c.col(j0 + jj) + i0;
        if (beta == 0.0)
        {
            for (std::size_t i = 0; i < mb; ++i)
            {
                cj[i] = alpha * acc[jj][i];
            }
        }
        else
        {
            for (std::size_t i = 0; i < mb; ++i)
            {
                cj[i] = beta * cj[i] + alpha * acc[jj][i];
            }
        }
    }
}

void gemm_nn(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c)
{
    double acc[kColBlock][kRowBlock];
    for (std::size_t j0 = 0; j0 < c.cols; j0 += kColBlock)
    {
        const std::size_t nb = std::min(kColBlock, c.cols - j0);
        for (std::size_t i0 = 0; i0 < c.rows; i0 += kRowBlock)
        {
            const std::size_t mb = std::min(kRowBlock, c.rows - i0);
            accumulate_block(a.data + i0, a.ld, mb, a.cols, b.col(j0), b.ld, nb, acc);
            store_block(alpha, beta, acc, mb, nb, c, i0, j0);
        }
    }
}

// A^T * B: transpose panels of A (kRowBlock columns at a time) into a packed
// buffer so that the same inner kernel, and the same summation order, applies.
void gemm_tn(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c)
{
    const std::size_t kdim = a.rows;
    std::vector<double> panel(kRowBlock * kdim);
    double acc[kColBlock][kRowBlock];
    for (std::size_t i0 = 0; i0 < c.rows; i0 += kRowBlock)
    {
        const std::size_t mb = std::min(kRowBlock, c.rows - i0);
        for (std::size_t i = 0; i < mb; ++i)
        {
            const double* src = a.col(i0 + i);
            for (std::size_t k = 0; k < kdim; ++k)
            {
                panel[i + k * mb] = src[k];
            }
        }
        for (std::size_t j0 = 0; j0 < c.cols; j0 += kColBlock)
        {
            const std::size_t nb = std::min(kColBlock, c.cols - j0);
            accumulate_block(panel.data(), mb, mb, kdim, b.col(j0), b.ld, nb, acc);
            store_block(alpha, beta, acc, mb, nb, c, i0, j0);
        }
    }
}

void gemm_serial(double alpha, ConstMatrixView a, Op op_a, ConstMatrixView b, double beta, MatrixView c)
{
    if (op_a == Op::NoTrans)
    {
        gemm_nn(alpha, a, b, beta, c);
    }
    else
    {
        gemm_tn(alpha, a, b, beta, c);
    }
}

} // namespace

void set_num_threads(unsigned n) { g_threads.store(std::max(1u, n)); }
unsigned num_threads() { return g_threads.load(); }

void gemm(double alpha, ConstMatrixView a, Op op_a, ConstMatrixView b, double beta, MatrixView c)
{
    const std::size_t m = op_a == Op::NoTrans ? a.rows : a.cols;
    const std::size_t k = op_a == Op::NoTrans ? a.cols : a.rows;
    if (m != c.rows || k != b.rows || b.cols != c.cols)
    {
        throw ShapeError("gemm: operand dimensions do not conform");
    }
    if (c.rows == 0 || c.cols == 0)
    {
        return;
    }
    if (k == 0 || alpha == 0.0)
    {
        for (std::size_t j = 0; j < c.cols; ++j)
        {
            double* cj = c.col(j);
            for (std::size_t i = 0; i < c.rows; ++i)
            {
                cj[i] = beta == 0.0 ? 0.0 : beta * cj[i];
            }
        }
        return;
    }

    // Column groups are whole multiples of kColBlock so the per-entry work is
    // identical whatever the thread count.
    const std::size_t groups = (c.cols + kColBlock - 1) / kColBlock;
    const double flops = 2.0 * double(m) * double(k) * double(c.cols);
    const std::size_t nthreads = std::min<std::size_t>(num_threads(), groups);
    if (nthreads <= 1 || flops < 4.0e6)
    {
        gemm_serial(alpha, a, op_a, b, beta, c);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(nthreads);
    const std::size_t per = (groups + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t)
    {
        const std::size_t j0 = std::min(c.cols, t * per * kColBlock);
        const std::size_t j1 = std::min(c.cols, (t + 1) * per * kColBlock);
        if (j0 >= j1)
        {
            break;
        }
        workers.emplace_back([=] { gemm_serial(alpha, a, op_a, b.columns(j0, j1 - j0), beta, c.columns(j0, j1 - j0)); });
    }
}

DenseMatrix local_gemm(double alpha, const DenseMatrix& a, bool transpose_a, const DenseMatrix& b, double beta,
                       DenseMatrix c)
{
    gemm(alpha, a.view(), transpose_a ? Op::Trans : Op::NoTrans, b.view(), beta, c.view());
    return c;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, Op op_a)
{
    DenseMatrix c(op_a == Op::NoTrans ? a.rows() : a.cols(), b.cols());
    gemm(1.0, a.view(), op_a, b.view(), 0.0, c.view());
    return c;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        s += x[i] * y[i];
    }
    return s;
}

double norm2(std::span<const double> x)
{
    // Scaled accumulation avoids overflow for large entries.
    double scale = 0.0;
    double ssq = 1.0;
    for (double v : x)
    {
        if (v != 0.0)
        {
            const double av = std::abs(v);
            if (scale < av)
            {
                ssq = 1.0 + ssq * (scale / av) * (scale / av);
                scale = av;
            }
            else
            {
                ssq += (av / scale) * (av / scale);
            }
        }
    }
    return scale * std::sqrt(ssq);
}

std::vector<double> column_norms(ConstMatrixView m)
{
    std::vector<double> out(m.cols);
    for (std::size_t j = 0; j < m.cols; ++j)
    {
        out[j] = norm2({m.col(j), m.rows});
    }
    return out;
}

std::vector<double> column_norms(const DenseMatrix& m) { return column_norms(m.view()); }

double frobenius_norm(const DenseMatrix& m) { return norm2(m.values()); }

double max_abs(const DenseMatrix& m)
{
    double r = 0.0;
    for (double v : m.values())
    {
        r = std::max(r, std::abs(v));
    }
    return r;
}

double orthogonality_error(ConstMatrixView m)
{
    DenseMatrix g(m.cols, m.cols);
    gemm(1.0, m, Op::Trans, m, 0.0, g.view());
    double err = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j)
    {
        for (std::size_t i = 0; i < m.cols; ++i)
        {
            err = std::max(err, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
        }
    }
    return err;
}

std::vector<std::size_t> householder_qr_inplace(MatrixView m)
{
    const std::size_t rows = m.rows;
    const std::size_t cols = m.cols;
    if (rows < cols)
    {
        throw ShapeError("householder_qr: need rows >= cols");
    }

    double max_norm = 0.0;
    for (double v : column_norms(ConstMatrixView(m)))
    {
        max_norm = std::max(max_norm, v);
    }
    const double threshold = double(rows) * std::numeric_limits<double>::epsilon() * max_norm;

    std::vector<double> tau(cols, 0.0);
    std::vector<std::size_t> deficient;

    // Apply I - t v v^T (v[0] == 1 implicit) to y[0..len).
    auto reflect = [](const double* v, double t, double* y, std::size_t len) {
        double s = y[0];
        for (std::size_t i = 1; i < len; ++i)
        {
            s += v[i] * y[i];
        }
        s *= t;
        y[0] -= s;
        for (std::size_t i = 1; i < len; ++i)
        {
            y[i] -= s * v[i];
        }
    };

    for (std::size_t j = 0; j < cols; ++j)
    {
        double* x = m.col(j) + j;
        const std::size_t len = rows - j;
        const double xnorm = norm2({x, len});
        if (!(xnorm >= threshold) || xnorm == 0.0)
        {
            deficient.push_back(j);
            std::fill(x + 1, x + len, 0.0);
            continue;
        }
        const double alpha = x[0] > 0 ? -xnorm : xnorm;
        const double v0 = x[0] - alpha;
        for (std::size_t i = 1; i < len; ++i)
        {
            x[i] /= v0;
        }
        x[0] = alpha;
        tau[j] = -v0 / alpha;
        for (std::size_t k = j + 1; k < cols; ++k)
        {
            reflect(x, tau[j], m.col(k) + j, len);
        }
    }

    // Form Q = H_0 ... H_{cols-1} I over the stored reflectors, last first.
    for (std::size_t j = cols; j-- > 0;)
    {
        double* v = m.col(j) + j;
        const std::size_t len = rows - j;
        for (std::size_t k = j + 1; k < cols; ++k)
        {
            reflect(v, tau[j], m.col(k) + j, len);
        }
        for (std::size_t i = 1; i < len; ++i)
        {
            v[i] *= -tau[j];
        }
        v[0] = 1.0 - tau[j];
        std::fill(m.col(j), v, 0.0);
    }
    return deficient;
}

QrResult householder_qr_checked(const DenseMatrix& m)
{
    QrResult result;
    result.q = m;
    result.deficient = householder_qr_inplace(result.q.view());
    return result;
}

DenseMatrix householder_qr(const DenseMatrix& m)
{
    auto res = householder_qr_checked(m);
    if (!res.deficient.empty())
    {
        throw RankError("householder_qr: matrix is numerically rank deficient", res.deficient);
    }
    return std::move(res.q);
}

namespace
{

// Implicit QL with Wilkinson shifts on (d, e); e[i] couples i-1 and i, e[0]
// unused. Rotations are accumulated into z. Adapted from the EISPACK tql2
// routine.
void tql2(std::vector<double>& d, std::vector<double>& e, DenseMatrix& z)
{
    const std::size_t n = d.size();
    if (n == 0)
    {
        return;
    }
    for (std::size_t i = 1; i < n; ++i)
    {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    const double eps = std::numeric_limits<double>::epsilon();
    const std::size_t max_sweeps = 30 * n;
    std::size_t sweeps = 0;
    double f = 0.0;
    double tst1 = 0.0;
    for (std::size_t l = 0; l < n; ++l)
    {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n - 1 && std::abs(e[m]) > eps * tst1)
        {
            ++m;
        }
        if (m > l)
        {
            do
            {
                if (++sweeps > max_sweeps)
                {
                    throw ConvergenceError("small_symmetric_eig: QL iteration did not converge");
                }
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0)
                {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i)
                {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t i = m; i-- > l;)
                {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    double* zi = z.col(i).data();
                    double* zi1 = z.col(i + 1).data();
                    for (std::size_t k = 0; k < z.rows(); ++k)
                    {
                        h = zi1[k];
                        zi1[k] = s * zi[k] + c * h;
                        zi[k] = c * zi[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

// Householder reduction of symmetric v (overwritten with the accumulated
// orthogonal transform) to tridiagonal (d, e). EISPACK tred2.
void tred2(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e)
{
    const std::size_t n = v.rows();
    for (std::size_t j = 0; j < n; ++j)
    {
        d[j] = v(n - 1, j);
    }
    for (std::size_t i = n - 1; i > 0; --i)
    {
        double scale = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k)
        {
            scale += std::abs(d[k]);
        }
        if (scale == 0.0)
        {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j)
            {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        }
        else
        {
            for (std::size_t k = 0; k < i; ++k)
            {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0)
            {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j)
            {
                e[j] = 0.0;
            }
            for (std::size_t j = 0; j < i; ++j)
            {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (std::size_t k = j + 1; k < i; ++k)
                {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j)
            {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j)
            {
                e[j] -= hh * d[j];
            }
            for (std::size_t j = 0; j < i; ++j)
            {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k < i; ++k)
                {
                    v(k, j) -= (f * e[k] + g * d[k]);
                }
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for (std::size_t i = 0; i + 1 < n; ++i)
    {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0)
        {
            for (std::size_t k = 0; k <= i; ++k)
            {
                d[k] = v(k, i + 1) / h;
            }
            for (std::size_t j = 0; j <= i; ++j)
            {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k)
                {
                    g += v(k, i + 1) * v(k, j);
                }
                for (std::size_t k = 0; k <= i; ++k)
                {
                    v(k, j) -= g * d[k];
                }
            }
        }
        for (std::size_t k = 0; k <= i; ++k)
        {
            v(k, i + 1) = 0.0;
        }
    }
    for (std::size_t j = 0; j < n; ++j)
    {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

EigenPairs sorted_pairs(std::vector<double> d, const DenseMatrix& z)
{
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    EigenPairs out;
    out.values.resize(n);
    out.vectors = DenseMatrix(z.rows(), n);
    for (std::size_t j = 0; j < n; ++j)
    {
        out.values[j] = d[order[j]];
        std::copy_n(z.col(order[j]).data(), z.rows(), out.vectors.col(j).data());
    }
    return out;
}

} // namespace

EigenPairs small_symmetric_eig(const DenseMatrix& g)
{
    if (g.rows() != g.cols())
    {
        throw ShapeError("small_symmetric_eig: matrix must be square");
    }
    const std::size_t n = g.rows();
    if (n == 0)
    {
        return {};
    }
    DenseMatrix v(n, n);
    for (std::size_t j = 0; j < n; ++j)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            v(i, j) = 0.5 * (g(i, j) + g(j, i));
        }
    }
    std::vector<double> d(n), e(n);
    tred2(v, d, e);
    tql2(d, e, v);
    return sorted_pairs(std::move(d), v);
}

EigenPairs tridiagonal_eig(std::span<const double> diag, std::span<const double> offdiag)
{
    const std::size_t n = diag.size();
    if (n == 0)
    {
        return {};
    }
    if (offdiag.size() + 1 != n)
    {
        throw ShapeError("tridiagonal_eig: offdiag must have length n - 1");
    }
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
    {
        e[i] = offdiag[i - 1];
    }
    DenseMatrix z = DenseMatrix::identity(n);
    tql2(d, e, z);
    return sorted_pairs(std::move(d), z);
}

} // namespace chase::core
