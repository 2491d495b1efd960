#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace chase
{

class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform.
class ShapeError : public Error
{
  public:
    using Error::Error;
};

/// Input fails a precondition that is not about shape (bad family, bad tolerance, ...).
class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

/// Householder QR detected numerically dependent columns.
class RankError : public Error
{
  public:
    RankError(const std::string& what, std::vector<std::size_t> columns)
        : Error(what), columns_(std::move(columns))
    {
    }

    const std::vector<std::size_t>& columns() const noexcept { return columns_; }

  private:
    std::vector<std::size_t> columns_;
};

class ConvergenceError : public Error
{
  public:
    using Error::Error;
};

/// Distributed operand handed to a kernel in the wrong 1D layout.
class LayoutError : public Error
{
  public:
    using Error::Error;
};

class IoError : public Error
{
  public:
    using Error::Error;
};

} // namespace chase
