#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scanpower
{

/// Structural problem with a netlist (cycle, unknown name, wrong cell kind).
class netlist_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Rejected input text. `line` and `column` are 1-based; column 0 means
/// the whole line.
class parse_error : public std::runtime_error
{
public:
  parse_error( std::size_t line, std::size_t column, std::string const& message )
      : std::runtime_error( format( line, column, message ) ), line_( line ), column_( column )
  {
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  static std::string format( std::size_t line, std::size_t column, std::string const& message )
  {
    std::string where = "line " + std::to_string( line );
    if ( column != 0 )
      where += ", column " + std::to_string( column );
    return where + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Pattern data that does not fit the netlist / chain map it is applied to.
class pattern_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace scanpower
