#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace scanpower
{

/// The primitive cell library. Port lists are fixed per kind; inputs come
/// first, outputs last.
enum class cell_kind : std::uint8_t
{
  inv,   // A -> Y
  buf,   // A -> Y
  and2,  // A0, A1 -> Y
  or2,   // A0, A1 -> Y
  nand2, // A0, A1 -> Y
  nor2,  // A0, A1 -> Y
  andb2, // A0, A1N -> Y = A0 & !A1N (freeze gate)
  dff,   // D, CLK -> Q, QB
  sff    // D, SI, SE, CLK -> Q, QB
};

inline constexpr std::array all_cell_kinds = { cell_kind::inv,   cell_kind::buf,   cell_kind::and2,
                                               cell_kind::or2,   cell_kind::nand2, cell_kind::nor2,
                                               cell_kind::andb2, cell_kind::dff,   cell_kind::sff };

namespace detail
{
inline constexpr std::array<std::string_view, 2> unary_ports = { "A", "Y" };
inline constexpr std::array<std::string_view, 3> binary_ports = { "A0", "A1", "Y" };
inline constexpr std::array<std::string_view, 3> andb_ports = { "A0", "A1N", "Y" };
inline constexpr std::array<std::string_view, 4> dff_ports = { "D", "CLK", "Q", "QB" };
inline constexpr std::array<std::string_view, 6> sff_ports = { "D", "SI", "SE", "CLK", "Q", "QB" };
} // namespace detail

constexpr std::span<const std::string_view> port_names( cell_kind kind ) noexcept
{
  switch ( kind )
  {
  case cell_kind::inv:
  case cell_kind::buf:
    return detail::unary_ports;
  case cell_kind::andb2:
    return detail::andb_ports;
  case cell_kind::dff:
    return detail::dff_ports;
  case cell_kind::sff:
    return detail::sff_ports;
  default:
    return detail::binary_ports;
  }
}

constexpr bool is_sequential( cell_kind kind ) noexcept { return kind == cell_kind::dff || kind == cell_kind::sff; }

constexpr std::size_t port_count( cell_kind kind ) noexcept { return port_names( kind ).size(); }

constexpr std::size_t output_count( cell_kind kind ) noexcept { return is_sequential( kind ) ? 2 : 1; }

constexpr std::size_t input_count( cell_kind kind ) noexcept { return port_count( kind ) - output_count( kind ); }

constexpr bool is_output_port( cell_kind kind, std::size_t port ) noexcept { return port >= input_count( kind ); }

/// Inputs of AND/OR/NAND/NOR may be permuted without changing the function.
constexpr bool has_symmetric_inputs( cell_kind kind ) noexcept
{
  return kind == cell_kind::and2 || kind == cell_kind::or2 || kind == cell_kind::nand2 || kind == cell_kind::nor2;
}

constexpr std::optional<std::size_t> port_index( cell_kind kind, std::string_view name ) noexcept
{
  auto const names = port_names( kind );
  for ( std::size_t i = 0; i < names.size(); ++i )
  {
    if ( names[i] == name )
      return i;
  }
  return std::nullopt;
}

/// Port indices of the flip-flop kinds.
struct ff_ports
{
  std::size_t d, clk, q, qb;
  std::optional<std::size_t> si, se;
};

constexpr ff_ports flip_flop_ports( cell_kind kind ) noexcept
{
  if ( kind == cell_kind::sff )
    return { 0, 3, 4, 5, 1, 2 };
  return { 0, 1, 2, 3, std::nullopt, std::nullopt };
}

constexpr std::string_view library_name( cell_kind kind ) noexcept
{
  switch ( kind )
  {
  case cell_kind::inv:
    return "inv02";
  case cell_kind::buf:
    return "buf02";
  case cell_kind::and2:
    return "and02";
  case cell_kind::or2:
    return "or02";
  case cell_kind::nand2:
    return "nand02";
  case cell_kind::nor2:
    return "nor02";
  case cell_kind::andb2:
    return "andb02";
  case cell_kind::dff:
    return "dff";
  case cell_kind::sff:
    return "sff";
  }
  return "?";
}

constexpr std::optional<cell_kind> kind_from_library_name( std::string_view name ) noexcept
{
  for ( auto kind : all_cell_kinds )
  {
    if ( library_name( kind ) == name )
      return kind;
  }
  return std::nullopt;
}

} // namespace scanpower
