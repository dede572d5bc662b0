#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "scanpower/cell_kind.hpp"

namespace scanpower
{

/// Three-valued logic. X is "unknown", never "don't care".
enum class logic3 : std::uint8_t
{
  zero,
  one,
  x
};

constexpr bool is_definite( logic3 v ) noexcept { return v != logic3::x; }

constexpr logic3 to_logic( bool b ) noexcept { return b ? logic3::one : logic3::zero; }

constexpr logic3 operator~( logic3 v ) noexcept
{
  switch ( v )
  {
  case logic3::zero:
    return logic3::one;
  case logic3::one:
    return logic3::zero;
  default:
    return logic3::x;
  }
}

constexpr logic3 operator&( logic3 a, logic3 b ) noexcept
{
  if ( a == logic3::zero || b == logic3::zero )
    return logic3::zero;
  if ( a == logic3::one && b == logic3::one )
    return logic3::one;
  return logic3::x;
}

constexpr logic3 operator|( logic3 a, logic3 b ) noexcept
{
  if ( a == logic3::one || b == logic3::one )
    return logic3::one;
  if ( a == logic3::zero && b == logic3::zero )
    return logic3::zero;
  return logic3::x;
}

/// XOR with a plain bit; used for QB-chain compensation.
constexpr logic3 flip_if( logic3 v, bool flip ) noexcept { return flip ? ~v : v; }

constexpr char to_char( logic3 v ) noexcept
{
  switch ( v )
  {
  case logic3::zero:
    return '0';
  case logic3::one:
    return '1';
  default:
    return 'X';
  }
}

inline logic3 logic_from_char( char c )
{
  switch ( c )
  {
  case '0':
    return logic3::zero;
  case '1':
    return logic3::one;
  case 'X':
  case 'x':
    return logic3::x;
  default:
    throw std::invalid_argument( std::string( "not a logic value: '" ) + c + "'" );
  }
}

/// Two-input (or one-input, `b` ignored) evaluation of a combinational kind.
constexpr logic3 eval_comb( cell_kind kind, logic3 a, logic3 b = logic3::x ) noexcept
{
  switch ( kind )
  {
  case cell_kind::inv:
    return ~a;
  case cell_kind::buf:
    return a;
  case cell_kind::and2:
    return a & b;
  case cell_kind::or2:
    return a | b;
  case cell_kind::nand2:
    return ~( a & b );
  case cell_kind::nor2:
    return ~( a | b );
  case cell_kind::andb2:
    return a & ~b;
  default:
    return logic3::x;
  }
}

/// Checked gate evaluation over an input list in port order.
inline logic3 eval_gate( cell_kind kind, std::span<const logic3> inputs )
{
  if ( is_sequential( kind ) )
    throw std::invalid_argument( "eval_gate: sequential cell kind " + std::string( library_name( kind ) ) );
  if ( inputs.size() != input_count( kind ) )
    throw std::invalid_argument( "eval_gate: " + std::string( library_name( kind ) ) + " expects " +
                                 std::to_string( input_count( kind ) ) + " inputs, got " +
                                 std::to_string( inputs.size() ) );
  return inputs.size() == 1 ? eval_comb( kind, inputs[0] ) : eval_comb( kind, inputs[0], inputs[1] );
}

/// Scan-cell next state: SE selects SI (1) or D (0); an unknown SE keeps
/// the value only where both data inputs agree.
constexpr logic3 scan_mux( logic3 se, logic3 si, logic3 d ) noexcept
{
  if ( se == logic3::one )
    return si;
  if ( se == logic3::zero )
    return d;
  return si == d ? si : logic3::x;
}

} // namespace scanpower
