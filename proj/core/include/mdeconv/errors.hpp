#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdeconv {

//! Base of every error raised by the library. `kind()` is the stable error
//! name printed by the command-line tool ("StripViolation", "EmptySample", ...).
class Error : public std::runtime_error
{
public:
  Error(std::string kind, const std::string& message)
    : std::runtime_error(kind + ": " + message)
    , kind_(std::move(kind))
  {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define MDECONV_DEFINE_ERROR(Name)                                             \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    explicit Name(const std::string& message)                                  \
      : Error(#Name, message)                                                  \
    {}                                                                         \
  }

MDECONV_DEFINE_ERROR(StripViolation);
MDECONV_DEFINE_ERROR(NonConvergence);
MDECONV_DEFINE_ERROR(PoleError);
MDECONV_DEFINE_ERROR(IllConditioned);
MDECONV_DEFINE_ERROR(GridResolution);
MDECONV_DEFINE_ERROR(DivergentIntegrand);
MDECONV_DEFINE_ERROR(NotIdentifiable);
MDECONV_DEFINE_ERROR(EmptySample);
MDECONV_DEFINE_ERROR(DomainError);
MDECONV_DEFINE_ERROR(DegenerateDesign);
MDECONV_DEFINE_ERROR(InvalidArgument);
MDECONV_DEFINE_ERROR(EmptyFile);

#undef MDECONV_DEFINE_ERROR

//! Malformed input file; carries the 1-based line number.
class ParseError : public Error
{
public:
  ParseError(std::size_t line, const std::string& message)
    : Error("ParseError", "line " + std::to_string(line) + ": " + message)
    , line_(line)
  {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace mdeconv
