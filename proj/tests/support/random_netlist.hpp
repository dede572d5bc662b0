#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <scanpower/scanpower.hpp>

namespace scanpower::testing
{

struct random_shape
{
  std::size_t inputs = 3;
  std::size_t flip_flops = 3;
  std::size_t gates = 10;
  std::size_t outputs = 2;
  bool read_qb = false; // let gates read inverted flip-flop outputs
};

/// Acyclic random sequential circuit in BENCH form. Signals: I* inputs,
/// F* flip-flops, N* gates.
inline std::string random_bench( std::mt19937_64& rng, random_shape const& shape )
{
  auto pick = [&]( std::size_t n ) { return std::uniform_int_distribution<std::size_t>( 0, n - 1 )( rng ); };
  std::vector<std::string> pool;
  std::ostringstream out;
  for ( std::size_t i = 0; i < shape.inputs; ++i )
  {
    out << "INPUT(I" << i << ")\n";
    pool.push_back( "I" + std::to_string( i ) );
  }
  for ( std::size_t i = 0; i < shape.flip_flops; ++i )
  {
    pool.push_back( "F" + std::to_string( i ) );
    if ( shape.read_qb )
      pool.push_back( "F" + std::to_string( i ) + "_qb" );
  }

  static constexpr char const* binary[] = { "AND", "OR", "NAND", "NOR" };
  std::vector<std::string> gate_lines;
  std::vector<std::string> gate_names;
  for ( std::size_t g = 0; g < shape.gates; ++g )
  {
    auto name = "N" + std::to_string( g );
    // Prefer recent signals so that logic gets some depth.
    auto arg = [&] {
      if ( !gate_names.empty() && pick( 3 ) != 0 )
        return gate_names[gate_names.size() - 1 - pick( std::min<std::size_t>( gate_names.size(), 4 ) )];
      return pool[pick( pool.size() )];
    };
    std::string line;
    if ( pick( 5 ) == 0 )
      line = name + " = " + ( pick( 2 ) ? "NOT" : "BUFF" ) + "(" + arg() + ")";
    else
    {
      auto a = arg();
      auto b = arg();
      line = name + " = " + binary[pick( 4 )] + "(" + a + ", " + b + ")";
    }
    gate_lines.push_back( line );
    gate_names.push_back( name );
    pool.push_back( name );
  }

  std::vector<std::string> sinks = gate_names;
  std::shuffle( sinks.begin(), sinks.end(), rng );
  for ( std::size_t i = 0; i < shape.outputs && i < sinks.size(); ++i )
    out << "OUTPUT(" << sinks[i] << ")\n";
  for ( std::size_t i = 0; i < shape.flip_flops; ++i )
  {
    auto const& d = gate_names.empty() ? pool[pick( shape.inputs )] : gate_names[pick( gate_names.size() )];
    out << "F" << i << " = DFF(" << d << ")\n";
  }
  for ( auto const& l : gate_lines )
    out << l << "\n";
  return out.str();
}

inline netlist random_netlist( std::mt19937_64& rng, random_shape const& shape )
{
  return parse_bench( random_bench( rng, shape ), "rnd" );
}

struct scan_design
{
  netlist design;
  chain_map chains;
};

/// Random circuit with scan inserted, random chain count and stitch.
inline scan_design random_scan_design( std::mt19937_64& rng, random_shape const& shape )
{
  auto nl = random_netlist( rng, shape );
  scan_config config;
  config.n_chains = 1 + rng() % std::min<std::size_t>( shape.flip_flops, 3 );
  config.stitch = rng() % 2 ? stitch_mode::qb : stitch_mode::q;
  config.partition = rng() % 2 ? partition_policy::round_robin : partition_policy::contiguous;
  auto [scanned, map] = insert_scan( nl, config );
  return { std::move( scanned ), std::move( map ) };
}

/// Every load/PI combination once (callers keep the bit count small).
inline std::vector<scan_pattern> exhaustive_patterns( netlist const& nl, chain_map const& chains )
{
  std::size_t const n_pi = functional_inputs( nl ).size();
  std::size_t bits = n_pi;
  for ( auto const& c : chains.chains )
    bits += c.cells.size();
  std::vector<scan_pattern> out;
  for ( std::uint64_t v = 0; v < ( std::uint64_t{ 1 } << bits ); ++v )
  {
    std::size_t b = 0;
    auto next = [&] { return ( v >> b++ ) & 1 ? '1' : '0'; };
    scan_pattern p;
    for ( auto const& c : chains.chains )
    {
      std::string s;
      for ( std::size_t i = 0; i < c.cells.size(); ++i )
        s += next();
      p.load.push_back( s );
    }
    for ( std::size_t i = 0; i < n_pi; ++i )
      p.pi += next();
    out.push_back( std::move( p ) );
  }
  return out;
}

/// Uniform random fully specified patterns.
inline std::vector<scan_pattern> random_patterns( std::mt19937_64& rng, netlist const& nl, chain_map const& chains,
                                                  std::size_t count )
{
  std::size_t const n_pi = functional_inputs( nl ).size();
  std::vector<scan_pattern> out( count );
  for ( auto& p : out )
  {
    for ( auto const& c : chains.chains )
    {
      std::string s;
      for ( std::size_t i = 0; i < c.cells.size(); ++i )
        s += rng() % 2 ? '1' : '0';
      p.load.push_back( s );
    }
    for ( std::size_t i = 0; i < n_pi; ++i )
      p.pi += rng() % 2 ? '1' : '0';
  }
  return out;
}

inline std::string read_file( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string data_path( std::string const& name ) { return std::string( SCANPOWER_DATA_DIR ) + "/" + name; }

inline netlist s27_scan() { return parse_vlog( read_file( data_path( "s27_scan.v" ) ) ); }
inline netlist s27_bench() { return parse_bench( read_file( data_path( "s27.bench" ) ), "s27" ); }

} // namespace scanpower::testing

namespace scanpower::testing
{

/// Scanned s27 (data/s27_scan.v) with its traced chain and the default ATPG set.
struct s27_fixture
{
  netlist design = s27_scan();
  chain_map chains = trace_chains( design );
  atpg_result atpg = generate_patterns( design, chains );
};

inline s27_fixture const& s27()
{
  static s27_fixture const f;
  return f;
}

} // namespace scanpower::testing
