#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/netlist.hpp"

namespace scanpower
{

enum class stitch_mode
{
  q,  // SI of cell i reads Q of cell i-1
  qb  // SI of cell i reads QB of cell i-1; data inverts at every stage
};

enum class partition_policy
{
  contiguous,
  round_robin
};

struct scan_config
{
  std::size_t n_chains = 1;
  stitch_mode stitch = stitch_mode::q;
  /// Explicit scan order (a permutation of all flip-flop cell names);
  /// declaration order when empty.
  std::optional<std::vector<std::string>> order;
  partition_policy partition = partition_policy::contiguous;
};

struct scan_chain
{
  std::string name;
  /// From the scan-in side to the scan-out side.
  std::vector<std::string> cells;
  std::string scan_in;
  std::string scan_out;

  bool operator==( scan_chain const& ) const = default;
};

struct chain_map
{
  stitch_mode stitch = stitch_mode::q;
  std::vector<scan_chain> chains;

  std::size_t max_length() const
  {
    std::size_t len = 0;
    for ( auto const& c : chains )
      len = std::max( len, c.cells.size() );
    return len;
  }

  std::size_t num_cells() const
  {
    std::size_t n = 0;
    for ( auto const& c : chains )
      n += c.cells.size();
    return n;
  }

  bool contains( std::string_view cell ) const
  {
    for ( auto const& c : chains )
      if ( std::find( c.cells.begin(), c.cells.end(), cell ) != c.cells.end() )
        return true;
    return false;
  }

  bool operator==( chain_map const& ) const = default;
};

inline std::string scan_in_port( std::size_t k ) { return "scan_in" + std::to_string( k ); }
inline std::string scan_out_port( std::size_t k ) { return "scan_out" + std::to_string( k ); }
inline std::string chain_name( std::size_t k ) { return "chain" + std::to_string( k ); }
inline constexpr std::string_view scan_enable_port = "scan_en";

namespace detail
{
inline bool has_numbered_prefix( std::string_view name, std::string_view prefix )
{
  if ( name.size() <= prefix.size() || name.substr( 0, prefix.size() ) != prefix )
    return false;
  return std::all_of( name.begin() + prefix.size(), name.end(), []( char c ) { return c >= '0' && c <= '9'; } );
}
} // namespace detail

/// Scan plumbing ports follow the naming used by insert_scan.
inline bool is_scan_input_name( std::string_view name ) { return detail::has_numbered_prefix( name, "scan_in" ); }
inline bool is_scan_output_name( std::string_view name ) { return detail::has_numbered_prefix( name, "scan_out" ); }

/// Primary inputs carrying functional data: everything except the clock,
/// the scan enable and the scan-in ports.
inline std::vector<net_id> functional_inputs( netlist const& nl )
{
  std::vector<net_id> out;
  for ( auto n : nl.inputs() )
  {
    if ( nl.clock() == n || nl.scan_enable() == n || is_scan_input_name( nl.get( n ).name ) )
      continue;
    out.push_back( n );
  }
  return out;
}

/// Indices of primary outputs that are not scan-out ports.
inline std::vector<std::size_t> functional_outputs( netlist const& nl )
{
  std::vector<std::size_t> out;
  for ( std::size_t i = 0; i < nl.outputs().size(); ++i )
    if ( !is_scan_output_name( nl.outputs()[i].name ) )
      out.push_back( i );
  return out;
}

/// Split an ordered flip-flop list into `n` chains. Chains are named
/// chain1..chainN with ports scan_in1.. / scan_out1..
inline chain_map partition_chains( std::vector<std::string> const& ffs, std::size_t n, partition_policy policy,
                                   stitch_mode stitch = stitch_mode::q )
{
  if ( n == 0 || n > ffs.size() )
    throw std::invalid_argument( "partition_chains: chain count " + std::to_string( n ) + " out of range 1.." +
                                 std::to_string( ffs.size() ) );
  chain_map map;
  map.stitch = stitch;
  for ( std::size_t k = 1; k <= n; ++k )
    map.chains.push_back( { chain_name( k ), {}, scan_in_port( k ), scan_out_port( k ) } );
  if ( policy == partition_policy::round_robin )
  {
    for ( std::size_t i = 0; i < ffs.size(); ++i )
      map.chains[i % n].cells.push_back( ffs[i] );
  }
  else
  {
    std::size_t const base = ffs.size() / n;
    std::size_t const extra = ffs.size() % n;
    std::size_t next = 0;
    for ( std::size_t k = 0; k < n; ++k )
    {
      std::size_t const len = base + ( k < extra ? 1 : 0 );
      for ( std::size_t i = 0; i < len; ++i )
        map.chains[k].cells.push_back( ffs[next++] );
    }
  }
  return map;
}

/// Replace every DFF with a scan flip-flop and stitch the chains. The input
/// netlist is untouched; cell names are preserved.
inline std::pair<netlist, chain_map> insert_scan( netlist const& original, scan_config const& config )
{
  auto const ffs = flip_flops( original );
  if ( ffs.empty() )
    throw netlist_error( "insert_scan: netlist has no flip-flops" );
  for ( auto id : ffs )
    if ( original.get( id ).kind == cell_kind::sff )
      throw netlist_error( "insert_scan: netlist already contains scan cell '" + original.get( id ).name + "'" );
  if ( original.scan_enable() || original.find_net( scan_enable_port ) )
    throw netlist_error( "insert_scan: netlist already has a scan enable" );
  for ( auto n : original.inputs() )
    if ( is_scan_input_name( original.get( n ).name ) )
      throw netlist_error( "insert_scan: netlist already has scan input '" + original.get( n ).name + "'" );
  for ( auto const& o : original.outputs() )
    if ( is_scan_output_name( o.name ) )
      throw netlist_error( "insert_scan: netlist already has scan output '" + o.name + "'" );
  if ( config.n_chains == 0 || config.n_chains > ffs.size() )
    throw netlist_error( "insert_scan: " + std::to_string( config.n_chains ) + " chains requested for " +
                         std::to_string( ffs.size() ) + " flip-flops" );

  std::vector<std::string> order;
  for ( auto id : ffs )
    order.push_back( original.get( id ).name );
  if ( config.order )
  {
    auto want = *config.order;
    auto have = order;
    std::sort( want.begin(), want.end() );
    std::sort( have.begin(), have.end() );
    if ( want != have )
      throw netlist_error( "insert_scan: explicit order is not a permutation of the flip-flops" );
    order = *config.order;
  }

  auto map = partition_chains( order, config.n_chains, config.partition, config.stitch );

  netlist nl = original;
  if ( !nl.clock() )
  {
    auto clk = nl.add_net( nl.fresh_net_name( "CLK" ) );
    nl.add_input( clk );
    nl.set_clock( clk );
  }
  std::vector<net_id> scan_ins;
  for ( std::size_t k = 1; k <= map.chains.size(); ++k )
  {
    if ( nl.find_net( scan_in_port( k ) ) )
      throw netlist_error( "insert_scan: net name " + scan_in_port( k ) + " already in use" );
    scan_ins.push_back( nl.add_net( scan_in_port( k ) ) );
    nl.add_input( scan_ins.back() );
  }
  auto const se = nl.add_net( std::string( scan_enable_port ) );
  nl.add_input( se );
  nl.set_scan_enable( se );

  auto const dff = flip_flop_ports( cell_kind::dff );
  auto const sff = flip_flop_ports( cell_kind::sff );
  for ( auto id : ffs )
  {
    auto const& c = nl.get( id );
    std::vector<net_id> pins( port_count( cell_kind::sff ) );
    pins[sff.d] = c.pins[dff.d];
    pins[sff.clk] = c.pins[dff.clk].valid() ? c.pins[dff.clk] : *nl.clock();
    pins[sff.q] = c.pins[dff.q];
    pins[sff.qb] = c.pins[dff.qb];
    pins[*sff.se] = se;
    nl.replace_cell( id, cell_kind::sff, std::move( pins ) );
  }

  // Stitch: each cell's scan output feeds the next cell's SI.
  auto scan_output_of = [&]( cell_id id ) {
    auto const port = config.stitch == stitch_mode::q ? sff.q : sff.qb;
    auto n = nl.get( id ).pins[port];
    if ( !n.valid() )
    {
      auto const& c = nl.get( id );
      auto const q = c.pins[sff.q];
      std::string base = config.stitch == stitch_mode::qb && q.valid() ? nl.get( q ).name + "_qb" : c.name + "_q";
      n = nl.add_net( nl.fresh_net_name( base ) );
      nl.connect( id, port, n );
    }
    return n;
  };
  for ( std::size_t k = 0; k < map.chains.size(); ++k )
  {
    net_id feed = scan_ins[k];
    for ( auto const& name : map.chains[k].cells )
    {
      auto id = nl.cell_named( name );
      nl.connect( id, *sff.si, feed );
      feed = scan_output_of( id );
    }
    nl.add_output( scan_out_port( k + 1 ), feed );
  }
  return { std::move( nl ), std::move( map ) };
}

/// Recover the chain map of a scan-inserted netlist by walking from each
/// scan_inK port through SI pins to scan_outK.
inline chain_map trace_chains( netlist const& nl )
{
  connectivity const conn( nl );
  auto const sff = flip_flop_ports( cell_kind::sff );
  chain_map map;
  std::optional<stitch_mode> stitch;
  std::set<std::string> visited;

  for ( std::size_t k = 1;; ++k )
  {
    auto in = nl.find_net( scan_in_port( k ) );
    if ( !in || !nl.is_input( *in ) )
      break;
    auto out_index = nl.find_output( scan_out_port( k ) );
    if ( !out_index )
      throw netlist_error( "trace_chains: " + scan_in_port( k ) + " has no matching " + scan_out_port( k ) );
    auto const out_net = nl.outputs()[*out_index].net;

    scan_chain chain{ chain_name( k ), {}, scan_in_port( k ), scan_out_port( k ) };
    net_id feed = *in;
    while ( feed != out_net || chain.cells.empty() )
    {
      std::optional<cell_id> next;
      for ( auto r : conn.readers( feed ) )
      {
        auto const& c = nl.get( r.cell );
        if ( c.kind == cell_kind::sff && r.port == *sff.si )
        {
          if ( next )
            throw netlist_error( "trace_chains: net '" + nl.get( feed ).name + "' feeds more than one SI pin" );
          next = r.cell;
        }
      }
      if ( !next )
      {
        if ( feed == out_net )
          break;
        throw netlist_error( "trace_chains: chain " + chain.name + " ends at '" + nl.get( feed ).name +
                             "' before reaching " + chain.scan_out );
      }
      auto const& c = nl.get( *next );
      if ( !visited.insert( c.name ).second )
        throw netlist_error( "trace_chains: cell '" + c.name + "' appears in two chains" );
      chain.cells.push_back( c.name );

      // Which output continues the chain: the one feeding an SI pin or the port.
      auto continues = [&]( net_id n ) {
        if ( !n.valid() )
          return false;
        if ( n == out_net )
          return true;
        for ( auto r : conn.readers( n ) )
          if ( nl.get( r.cell ).kind == cell_kind::sff && r.port == *sff.si )
            return true;
        return false;
      };
      bool const via_q = continues( c.pins[sff.q] );
      bool const via_qb = continues( c.pins[sff.qb] );
      if ( via_q == via_qb )
        throw netlist_error( "trace_chains: cannot tell how cell '" + c.name + "' continues its chain" );
      auto const mode = via_q ? stitch_mode::q : stitch_mode::qb;
      if ( stitch && *stitch != mode )
        throw netlist_error( "trace_chains: chains mix Q and QB stitching" );
      stitch = mode;
      feed = via_q ? c.pins[sff.q] : c.pins[sff.qb];
      if ( feed == out_net )
        break;
    }
    map.chains.push_back( std::move( chain ) );
  }
  if ( map.chains.empty() )
    throw netlist_error( "trace_chains: no scan_in1 port" );
  map.stitch = stitch.value_or( stitch_mode::q );
  return map;
}

} // namespace scanpower
