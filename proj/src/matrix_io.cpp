#include "chase/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "chase/errors.hpp"

namespace chase::io
{

namespace
{

template <typename U>
void put_le(std::vector<char>& buf, U value)
{
    for (std::size_t b = 0; b < sizeof(U); ++b)
    {
        buf.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
    }
}

template <typename U>
U get_le(const unsigned char* p)
{
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
    {
        v |= static_cast<U>(p[b]) << (8 * b);
    }
    return v;
}

} // namespace

void write_matrix(std::ostream& os, const DenseMatrix& m)
{
    std::vector<char> buf;
    buf.reserve(kHeaderBytes + 8 * m.size());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_le<std::uint32_t>(buf, kFormatVersion);
    put_le<std::uint64_t>(buf, m.rows());
    put_le<std::uint64_t>(buf, m.cols());
    for (double v : m.values())
    {
        put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os)
    {
        throw IoError("write_matrix: stream write failed");
    }
}

DenseMatrix read_matrix(std::istream& is)
{
    std::array<unsigned char, kHeaderBytes> header{};
    if (!is.read(reinterpret_cast<char*>(header.data()), kHeaderBytes))
    {
        throw IoError("read_matrix: truncated header");
    }
    if (std::memcmp(header.data(), kMagic, 4) != 0)
    {
        throw IoError("read_matrix: bad magic (not a CHSM file)");
    }
    const auto version = get_le<std::uint32_t>(header.data() + 4);
    if (version != kFormatVersion)
    {
        throw IoError("read_matrix: unsupported format version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint64_t>(header.data() + 8);
    const auto cols = get_le<std::uint64_t>(header.data() + 16);
    if (rows != 0 && cols > (std::uint64_t(1) << 40) / rows)
    {
        throw IoError("read_matrix: implausible dimensions");
    }
    std::vector<unsigned char> raw(8 * rows * cols);
    if (!raw.empty() && !is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    {
        throw IoError("read_matrix: truncated payload");
    }
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
    {
        m.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(raw.data() + 8 * i));
    }
    return m;
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
    {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_matrix(os, m);
}

DenseMatrix read_matrix(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
    {
        throw IoError("cannot open " + path.string());
    }
    return read_matrix(is);
}

} // namespace chase::io
