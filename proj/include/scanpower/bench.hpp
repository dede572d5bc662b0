#pragma once

#include <cctype>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scanpower/errors.hpp"
#include "scanpower/netlist.hpp"

namespace scanpower
{

namespace detail
{

inline std::string_view trim( std::string_view s )
{
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.front() ) ) )
    s.remove_prefix( 1 );
  while ( !s.empty() && std::isspace( static_cast<unsigned char>( s.back() ) ) )
    s.remove_suffix( 1 );
  return s;
}

inline bool is_bench_identifier( std::string_view s )
{
  if ( s.empty() )
    return false;
  for ( char c : s )
  {
    if ( !std::isalnum( static_cast<unsigned char>( c ) ) && c != '_' && c != '.' && c != '[' && c != ']' )
      return false;
  }
  return true;
}

/// Bracketed names become bracket-free: `a[1]` -> `a_1_`.
inline std::string canonical_name( std::string_view raw )
{
  if ( !raw.empty() && raw.front() == '\\' )
    raw.remove_prefix( 1 );
  std::string out( raw );
  for ( auto& c : out )
  {
    if ( c == '[' || c == ']' )
      c = '_';
  }
  return out;
}

} // namespace detail

/// Parse ISCAS89 BENCH text. Flip-flops get their clock from a synthesized
/// `CLK` input; the QB output is bound only when some gate reads `<q>_qb`.
inline netlist parse_bench( std::string_view text, std::string module_name = "top" )
{
  struct gate_line
  {
    std::size_t line;
    std::string out;
    std::string kind;
    std::vector<std::string> args;
  };

  std::vector<std::pair<std::size_t, std::string>> input_names;
  std::vector<std::pair<std::size_t, std::string>> output_names;
  std::vector<gate_line> gates;
  std::unordered_map<std::string, std::size_t> defined_at; // signal -> line

  auto define = [&]( std::string const& name, std::size_t line ) {
    auto [it, fresh] = defined_at.try_emplace( name, line );
    if ( !fresh )
      throw parse_error( line, 0, "signal '" + name + "' redefined (first defined at line " +
                                      std::to_string( it->second ) + ")" );
  };

  auto parse_call = [&]( std::string_view body, std::size_t line, std::string& head,
                         std::vector<std::string>& args ) {
    auto const open = body.find( '(' );
    auto const close = body.rfind( ')' );
    if ( open == std::string_view::npos || close == std::string_view::npos || close < open ||
         !detail::trim( body.substr( close + 1 ) ).empty() )
      throw parse_error( line, 0, "expected NAME(args)" );
    head = std::string( detail::trim( body.substr( 0, open ) ) );
    args.clear();
    auto inner = body.substr( open + 1, close - open - 1 );
    if ( detail::trim( inner ).empty() )
      return;
    std::size_t start = 0;
    while ( true )
    {
      auto comma = inner.find( ',', start );
      auto piece = detail::trim( inner.substr( start, comma == std::string_view::npos ? inner.npos : comma - start ) );
      if ( !detail::is_bench_identifier( piece ) )
        throw parse_error( line, 0, "bad signal name '" + std::string( piece ) + "'" );
      args.push_back( detail::canonical_name( piece ) );
      if ( comma == std::string_view::npos )
        break;
      start = comma + 1;
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while ( pos <= text.size() )
  {
    auto eol = text.find( '\n', pos );
    auto raw = text.substr( pos, eol == std::string_view::npos ? text.npos : eol - pos );
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if ( auto hash = raw.find( '#' ); hash != std::string_view::npos )
      raw = raw.substr( 0, hash );
    auto line = detail::trim( raw );
    if ( line.empty() )
      continue;

    std::string head;
    std::vector<std::string> args;
    if ( auto eq = line.find( '=' ); eq != std::string_view::npos )
    {
      auto lhs = detail::trim( line.substr( 0, eq ) );
      if ( !detail::is_bench_identifier( lhs ) )
        throw parse_error( line_no, 0, "bad signal name '" + std::string( lhs ) + "'" );
      parse_call( line.substr( eq + 1 ), line_no, head, args );
      for ( auto& c : head )
        c = static_cast<char>( std::toupper( static_cast<unsigned char>( c ) ) );
      auto out = detail::canonical_name( lhs );
      define( out, line_no );
      gates.push_back( { line_no, std::move( out ), std::move( head ), std::move( args ) } );
      continue;
    }

    parse_call( line, line_no, head, args );
    if ( args.size() != 1 )
      throw parse_error( line_no, 0, head + " takes exactly one signal" );
    if ( head == "INPUT" )
    {
      define( args[0], line_no );
      input_names.emplace_back( line_no, args[0] );
    }
    else if ( head == "OUTPUT" )
    {
      output_names.emplace_back( line_no, args[0] );
    }
    else
    {
      throw parse_error( line_no, 0, "unknown statement '" + head + "'" );
    }
  }

  static const std::map<std::string, std::pair<cell_kind, std::size_t>, std::less<>> kinds = {
      { "NOT", { cell_kind::inv, 1 } },  { "BUFF", { cell_kind::buf, 1 } }, { "BUF", { cell_kind::buf, 1 } },
      { "AND", { cell_kind::and2, 2 } }, { "OR", { cell_kind::or2, 2 } },   { "NAND", { cell_kind::nand2, 2 } },
      { "NOR", { cell_kind::nor2, 2 } }, { "DFF", { cell_kind::dff, 1 } } };

  // Flip-flop QB nets are referenced as `<q>_qb`.
  std::unordered_map<std::string, std::string> qb_owner;
  bool has_ff = false;
  for ( auto const& g : gates )
  {
    auto it = kinds.find( g.kind );
    if ( it == kinds.end() )
      throw parse_error( g.line, 0, "unknown gate kind '" + g.kind + "'" );
    if ( g.args.size() != it->second.second )
      throw parse_error( g.line, 0, g.kind + " expects " + std::to_string( it->second.second ) + " input(s), got " +
                                        std::to_string( g.args.size() ) );
    if ( it->second.first == cell_kind::dff )
    {
      has_ff = true;
      qb_owner.emplace( g.out + "_qb", g.out );
    }
  }

  auto is_known = [&]( std::string const& s ) { return defined_at.count( s ) || qb_owner.count( s ); };
  for ( auto const& g : gates )
    for ( auto const& a : g.args )
      if ( !is_known( a ) )
        throw parse_error( g.line, 0, "undefined signal '" + a + "'" );
  for ( auto const& [line, name] : output_names )
    if ( !is_known( name ) )
      throw parse_error( line, 0, "undefined signal '" + name + "'" );

  netlist nl( std::move( module_name ) );
  if ( has_ff )
  {
    if ( defined_at.count( "CLK" ) )
      throw parse_error( defined_at.at( "CLK" ), 0, "signal name CLK is reserved for the flip-flop clock" );
    auto clk = nl.add_net( "CLK" );
    nl.add_input( clk );
    nl.set_clock( clk );
  }
  for ( auto const& [line, name] : input_names )
    nl.add_input( nl.add_net( name ) );

  std::unordered_map<std::string, bool> referenced;
  for ( auto const& g : gates )
    for ( auto const& a : g.args )
      referenced[a] = true;
  for ( auto const& [line, name] : output_names )
    referenced[name] = true;

  for ( auto const& g : gates )
  {
    auto const [kind, arity] = kinds.at( g.kind );
    std::vector<net_id> pins;
    if ( kind == cell_kind::dff )
    {
      auto const qb_name = g.out + "_qb";
      net_id qb{};
      if ( referenced.count( qb_name ) )
        qb = nl.net_or_add( qb_name );
      pins = { nl.net_or_add( g.args[0] ), *nl.clock(), nl.net_or_add( g.out ), qb };
      nl.add_cell( "reg_" + g.out, kind, std::move( pins ) );
    }
    else
    {
      for ( auto const& a : g.args )
        pins.push_back( nl.net_or_add( a ) );
      pins.push_back( nl.net_or_add( g.out ) );
      nl.add_cell( "ix_" + g.out, kind, std::move( pins ) );
    }
  }
  for ( auto const& [line, name] : output_names )
    nl.add_output( name, nl.net_or_add( name ) );
  return nl;
}

inline netlist parse_bench( std::istream& in, std::string module_name = "top" )
{
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_bench( buffer.str(), std::move( module_name ) );
}

} // namespace scanpower
