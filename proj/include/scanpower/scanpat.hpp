#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scanpower/errors.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"

namespace scanpower
{

/// Contents of a SCANPAT v1 file.
///
///   SCANPAT 1
///   CHAINS chain1:3
///   INPUTS G0 G1 G2 G3
///   OUTPUTS G17
///   PATTERN 0
///   LOAD chain1 010
///   PI 0110
///   PO 1
///   UNLOAD chain1 101
///   END
///
/// Lists with no entries leave the keyword alone on its line.
struct scanpat_file
{
  std::vector<std::pair<std::string, std::size_t>> chains;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<scan_pattern> patterns;

  bool operator==( scanpat_file const& ) const = default;
};

/// Header fields taken from a netlist and its chains.
inline scanpat_file make_scanpat( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> patterns )
{
  scanpat_file f;
  for ( auto const& c : chains.chains )
    f.chains.emplace_back( c.name, c.cells.size() );
  for ( auto n : functional_inputs( nl ) )
    f.inputs.push_back( nl.get( n ).name );
  for ( auto i : functional_outputs( nl ) )
    f.outputs.push_back( nl.outputs()[i].name );
  f.patterns = std::move( patterns );
  return f;
}

/// Throws pattern_error when the file does not describe this netlist.
inline void check_scanpat( scanpat_file const& f, netlist const& nl, chain_map const& chains )
{
  auto const expected = make_scanpat( nl, chains, {} );
  if ( f.chains != expected.chains )
    throw pattern_error( "pattern file chains do not match the chain map" );
  if ( f.inputs != expected.inputs )
    throw pattern_error( "pattern file INPUTS do not match the netlist's functional inputs" );
  if ( f.outputs != expected.outputs )
    throw pattern_error( "pattern file OUTPUTS do not match the netlist's functional outputs" );
}

namespace detail
{

inline std::string join( std::vector<std::string> const& items, char sep )
{
  std::string out;
  for ( std::size_t i = 0; i < items.size(); ++i )
  {
    if ( i )
      out += sep;
    out += items[i];
  }
  return out;
}

inline std::string keyword_line( std::string_view keyword, std::string const& rest )
{
  return rest.empty() ? std::string( keyword ) : std::string( keyword ) + " " + rest;
}

class scanpat_reader
{
public:
  explicit scanpat_reader( std::istream& in )
  {
    std::string line;
    std::size_t number = 0;
    while ( std::getline( in, line ) )
    {
      ++number;
      if ( in.eof() )
        fail_at( number, "last line is not newline-terminated (truncated file?)" );
      if ( !line.empty() && line.back() == '\r' )
        fail_at( number, "carriage return not allowed" );
      if ( !line.empty() && line.front() == '#' )
        continue;
      lines_.emplace_back( number, line );
    }
    last_line_ = number;
  }

  scanpat_file read()
  {
    scanpat_file f;
    if ( next( "SCANPAT" ) != "1" )
      fail( "unsupported SCANPAT version" );

    for ( auto const& item : split( next( "CHAINS" ), ',' ) )
    {
      auto colon = item.find( ':' );
      if ( colon == std::string::npos || colon == 0 )
        fail( "chain entry '" + item + "' is not name:length" );
      f.chains.emplace_back( item.substr( 0, colon ), parse_count( item.substr( colon + 1 ) ) );
    }
    f.inputs = split( next( "INPUTS" ), ' ' );
    f.outputs = split( next( "OUTPUTS" ), ' ' );

    while ( pos_ < lines_.size() )
    {
      auto const index = parse_count( next( "PATTERN" ) );
      if ( index != f.patterns.size() )
        fail( "expected PATTERN " + std::to_string( f.patterns.size() ) );
      scan_pattern p;
      for ( auto const& [name, len] : f.chains )
        p.load.push_back( chain_bits( next( "LOAD" ), name, len ) );
      p.pi = bits( next( "PI" ), f.inputs.size() );
      p.expected_po = bits( next( "PO" ), f.outputs.size() );
      for ( auto const& [name, len] : f.chains )
        p.expected_unload.push_back( chain_bits( next( "UNLOAD" ), name, len ) );
      if ( !next( "END" ).empty() )
        fail( "END takes no arguments" );
      f.patterns.push_back( std::move( p ) );
    }
    return f;
  }

private:
  [[noreturn]] static void fail_at( std::size_t line, std::string const& msg ) { throw parse_error( line, 0, msg ); }

  [[noreturn]] void fail( std::string const& msg ) const { fail_at( current_, msg ); }

  /// Consume the next line, which must start with `keyword`; returns the
  /// text after the single separating space.
  std::string next( std::string_view keyword )
  {
    if ( pos_ >= lines_.size() )
      fail_at( last_line_ + 1, "unexpected end of file, expected " + std::string( keyword ) );
    auto const& [number, text] = lines_[pos_++];
    current_ = number;
    if ( text == keyword )
      return {};
    if ( text.size() > keyword.size() + 1 && text.compare( 0, keyword.size(), keyword ) == 0 &&
         text[keyword.size()] == ' ' )
      return text.substr( keyword.size() + 1 );
    fail( "expected " + std::string( keyword ) );
  }

  std::vector<std::string> split( std::string const& text, char sep ) const
  {
    std::vector<std::string> out;
    if ( text.empty() )
      return out;
    std::size_t start = 0;
    while ( true )
    {
      auto end = text.find( sep, start );
      auto item = text.substr( start, end == std::string::npos ? std::string::npos : end - start );
      if ( item.empty() || item.find_first_of( " \t" ) != std::string::npos )
        fail( "malformed list" );
      out.push_back( std::move( item ) );
      if ( end == std::string::npos )
        break;
      start = end + 1;
    }
    return out;
  }

  std::size_t parse_count( std::string const& text ) const
  {
    if ( text.empty() || text.size() > 9 || text.find_first_not_of( "0123456789" ) != std::string::npos )
      fail( "expected a number, got '" + text + "'" );
    return std::stoul( text );
  }

  std::string bits( std::string const& text, std::size_t len ) const
  {
    if ( text.find_first_not_of( "01X" ) != std::string::npos )
      fail( "bits must be 0, 1 or X" );
    if ( text.size() != len )
      fail( "expected " + std::to_string( len ) + " bits, got " + std::to_string( text.size() ) );
    return text;
  }

  std::string chain_bits( std::string const& text, std::string const& chain, std::size_t len ) const
  {
    auto space = text.find( ' ' );
    if ( text.substr( 0, space ) != chain )
      fail( "expected chain " + chain );
    if ( space == std::string::npos )
      return bits( {}, len );
    return bits( text.substr( space + 1 ), len );
  }

  std::vector<std::pair<std::size_t, std::string>> lines_;
  std::size_t pos_ = 0;
  std::size_t current_ = 0;
  std::size_t last_line_ = 0;
};

} // namespace detail

inline scanpat_file read_scanpat( std::istream& in ) { return detail::scanpat_reader( in ).read(); }

inline scanpat_file read_scanpat( std::string_view text )
{
  std::istringstream in{ std::string( text ) };
  return read_scanpat( in );
}

inline std::string write_scanpat( scanpat_file const& f )
{
  std::vector<std::string> chains;
  for ( auto const& [name, len] : f.chains )
    chains.push_back( name + ":" + std::to_string( len ) );
  std::string out = "SCANPAT 1\n";
  out += detail::keyword_line( "CHAINS", detail::join( chains, ',' ) ) + "\n";
  out += detail::keyword_line( "INPUTS", detail::join( f.inputs, ' ' ) ) + "\n";
  out += detail::keyword_line( "OUTPUTS", detail::join( f.outputs, ' ' ) ) + "\n";
  auto or_x = []( std::string const& s, std::size_t len ) { return s.empty() ? std::string( len, 'X' ) : s; };
  for ( std::size_t i = 0; i < f.patterns.size(); ++i )
  {
    auto const& p = f.patterns[i];
    out += "PATTERN " + std::to_string( i ) + "\n";
    for ( std::size_t k = 0; k < f.chains.size(); ++k )
      out += "LOAD " + f.chains[k].first + " " + p.load.at( k ) + "\n";
    out += detail::keyword_line( "PI", p.pi ) + "\n";
    out += detail::keyword_line( "PO", or_x( p.expected_po, f.outputs.size() ) ) + "\n";
    for ( std::size_t k = 0; k < f.chains.size(); ++k )
    {
      auto const unload = k < p.expected_unload.size() ? p.expected_unload[k] : std::string{};
      out += "UNLOAD " + f.chains[k].first + " " + or_x( unload, f.chains[k].second ) + "\n";
    }
    out += "END\n";
  }
  return out;
}

} // namespace scanpower
