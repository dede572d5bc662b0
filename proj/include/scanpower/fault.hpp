#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/fault_model.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/scan.hpp"

namespace scanpower
{

namespace detail
{

/// Net pins a fault can sit on, ignoring scan plumbing.
inline bool is_functional_reader( netlist const& nl, pin_ref r )
{
  auto const& c = nl.get( r.cell );
  if ( !is_sequential( c.kind ) )
    return true;
  return r.port == flip_flop_ports( c.kind ).d;
}

inline bool has_functional_readers( netlist const& nl, connectivity const& conn, net_id n )
{
  if ( !n.valid() )
    return false;
  for ( auto r : conn.readers( n ) )
    if ( is_functional_reader( nl, r ) )
      return true;
  for ( auto i : conn.output_readers( n ) )
    if ( !is_scan_output_name( nl.outputs()[i].name ) )
      return true;
  return false;
}

} // namespace detail

/// Fault sites of a netlist: every bound combinational pin, every
/// flip-flop D and Q pin, QB only when functional logic reads it, and the
/// functional primary inputs. Sorted by (cell, port); inputs come first.
inline std::vector<fault_site> fault_sites( netlist const& nl )
{
  connectivity const conn( nl );
  std::vector<fault_site> sites;
  for ( auto n : functional_inputs( nl ) )
    sites.push_back( { "", nl.get( n ).name } );
  for ( auto const& c : nl.cells() )
  {
    auto const ports = port_names( c.kind );
    if ( !is_sequential( c.kind ) )
    {
      for ( std::size_t p = 0; p < c.pins.size(); ++p )
        if ( c.pins[p].valid() )
          sites.push_back( { c.name, std::string( ports[p] ) } );
      continue;
    }
    auto const ff = flip_flop_ports( c.kind );
    if ( c.pins[ff.d].valid() )
      sites.push_back( { c.name, std::string( ports[ff.d] ) } );
    if ( c.pins[ff.q].valid() )
      sites.push_back( { c.name, std::string( ports[ff.q] ) } );
    if ( detail::has_functional_readers( nl, conn, c.pins[ff.qb] ) )
      sites.push_back( { c.name, std::string( ports[ff.qb] ) } );
  }
  std::sort( sites.begin(), sites.end() );
  return sites;
}

/// Uncollapsed stuck-at universe: SA0 and SA1 on every fault site.
inline std::vector<fault> enumerate_faults( netlist const& nl )
{
  std::vector<fault> faults;
  for ( auto const& s : fault_sites( nl ) )
  {
    faults.push_back( { s, stuck_at::sa0 } );
    faults.push_back( { s, stuck_at::sa1 } );
  }
  return faults;
}

/// Equivalence classes over a fault list.
struct fault_classes
{
  /// One representative per class (the smallest member), sorted.
  std::vector<fault> representatives;
  /// For every input fault, the index of its class in `representatives`.
  std::vector<std::size_t> class_of;
};

/// Classical equivalence collapsing restricted to the faults given: gate
/// input/output rules for AND/NAND/OR/NOR/INV/BUF/ANDB2, and a net with a
/// single reader pin merges its driver's faults with that pin's faults.
inline fault_classes classify_faults( netlist const& nl, std::vector<fault> const& faults )
{
  std::map<fault, std::size_t> index;
  for ( std::size_t i = 0; i < faults.size(); ++i )
    index.try_emplace( faults[i], i );

  std::vector<std::size_t> parent( faults.size() );
  std::iota( parent.begin(), parent.end(), 0 );
  auto find = [&]( std::size_t i ) {
    while ( parent[i] != i )
      i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&]( fault const& a, fault const& b ) {
    auto ia = index.find( a );
    auto ib = index.find( b );
    if ( ia == index.end() || ib == index.end() )
      return;
    auto ra = find( ia->second );
    auto rb = find( ib->second );
    if ( ra != rb )
      parent[std::max( ra, rb )] = std::min( ra, rb );
  };
  auto pin_fault = [&]( cell const& c, std::size_t port, stuck_at s ) {
    return fault{ { c.name, std::string( port_names( c.kind )[port] ) }, s };
  };
  constexpr auto sa0 = stuck_at::sa0;
  constexpr auto sa1 = stuck_at::sa1;

  for ( auto const& c : nl.cells() )
  {
    auto const y = input_count( c.kind );
    switch ( c.kind )
    {
    case cell_kind::inv:
      unite( pin_fault( c, 0, sa0 ), pin_fault( c, y, sa1 ) );
      unite( pin_fault( c, 0, sa1 ), pin_fault( c, y, sa0 ) );
      break;
    case cell_kind::buf:
      unite( pin_fault( c, 0, sa0 ), pin_fault( c, y, sa0 ) );
      unite( pin_fault( c, 0, sa1 ), pin_fault( c, y, sa1 ) );
      break;
    case cell_kind::and2:
    case cell_kind::nand2:
    {
      auto const out = c.kind == cell_kind::and2 ? sa0 : sa1;
      unite( pin_fault( c, 0, sa0 ), pin_fault( c, y, out ) );
      unite( pin_fault( c, 1, sa0 ), pin_fault( c, y, out ) );
      break;
    }
    case cell_kind::or2:
    case cell_kind::nor2:
    {
      auto const out = c.kind == cell_kind::or2 ? sa1 : sa0;
      unite( pin_fault( c, 0, sa1 ), pin_fault( c, y, out ) );
      unite( pin_fault( c, 1, sa1 ), pin_fault( c, y, out ) );
      break;
    }
    case cell_kind::andb2:
      unite( pin_fault( c, 0, sa0 ), pin_fault( c, y, sa0 ) );
      unite( pin_fault( c, 1, sa1 ), pin_fault( c, y, sa0 ) );
      break;
    default:
      break;
    }
  }

  // Fanout-free nets: the driving site and the only reading pin are the
  // same wire.
  connectivity const conn( nl );
  for ( std::size_t i = 0; i < nl.num_nets(); ++i )
  {
    net_id const n{ i };
    auto const readers = conn.readers( n );
    if ( readers.size() != 1 || !conn.output_readers( n ).empty() )
      continue;
    std::optional<fault_site> driver;
    if ( auto d = conn.driver_pin( n ); d && conn.cell_drivers( n ).size() == 1 && conn.input_driver_count( n ) == 0 )
    {
      auto const& c = nl.get( d->cell );
      driver = fault_site{ c.name, std::string( port_names( c.kind )[d->port] ) };
    }
    else if ( conn.cell_drivers( n ).empty() && conn.input_driver_count( n ) == 1 )
      driver = fault_site{ "", nl.get( n ).name };
    if ( !driver )
      continue;
    auto const& rc = nl.get( readers[0].cell );
    fault_site const reader{ rc.name, std::string( port_names( rc.kind )[readers[0].port] ) };
    unite( { *driver, sa0 }, { reader, sa0 } );
    unite( { *driver, sa1 }, { reader, sa1 } );
  }

  // Representatives: smallest member of each class.
  std::vector<std::size_t> best( faults.size(), faults.size() );
  for ( std::size_t i = 0; i < faults.size(); ++i )
  {
    auto r = find( i );
    if ( best[r] == faults.size() || faults[i] < faults[best[r]] )
      best[r] = i;
  }
  fault_classes out;
  for ( std::size_t i = 0; i < faults.size(); ++i )
    if ( find( i ) == i )
      out.representatives.push_back( faults[best[i]] );
  std::sort( out.representatives.begin(), out.representatives.end() );
  out.representatives.erase( std::unique( out.representatives.begin(), out.representatives.end() ),
                             out.representatives.end() );
  out.class_of.resize( faults.size() );
  for ( std::size_t i = 0; i < faults.size(); ++i )
  {
    auto const& rep = faults[best[find( i )]];
    out.class_of[i] = static_cast<std::size_t>(
        std::lower_bound( out.representatives.begin(), out.representatives.end(), rep ) - out.representatives.begin() );
  }
  return out;
}

inline std::vector<fault> collapse_faults( netlist const& nl, std::vector<fault> const& faults )
{
  return classify_faults( nl, faults ).representatives;
}

} // namespace scanpower
