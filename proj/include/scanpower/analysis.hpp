#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scanpower/netlist.hpp"

namespace scanpower
{

enum class diagnostic_kind
{
  unbound_pin,
  multiple_drivers,
  combinational_cycle,
  duplicate_name,
  floating_net,
  port_conflict
};

struct diagnostic
{
  diagnostic_kind kind;
  std::string message;
};

namespace detail
{

/// Combinational cell -> combinational cells reading one of its outputs.
inline std::vector<std::vector<std::size_t>> comb_successors( netlist const& nl, connectivity const& conn )
{
  std::vector<std::vector<std::size_t>> succ( nl.num_cells() );
  nl.foreach_cell( [&]( cell_id id, cell const& c ) {
    if ( is_sequential( c.kind ) )
      return;
    for ( std::size_t p = input_count( c.kind ); p < c.pins.size(); ++p )
    {
      if ( !c.pins[p].valid() )
        continue;
      for ( auto r : conn.readers( c.pins[p] ) )
      {
        if ( !is_sequential( nl.get( r.cell ).kind ) )
          succ[id.get()].push_back( r.cell.get() );
      }
    }
  } );
  return succ;
}

/// Strongly connected components with a cycle (size > 1 or a self loop),
/// restricted to combinational cells.
inline std::vector<std::vector<std::size_t>> cyclic_components( netlist const& nl, connectivity const& conn )
{
  auto const succ = comb_successors( nl, conn );
  std::size_t const n = nl.num_cells();
  std::vector<std::vector<std::size_t>> pred( n );
  for ( std::size_t u = 0; u < n; ++u )
    for ( auto v : succ[u] )
      pred[v].push_back( u );

  // Kosaraju, iterative.
  std::vector<bool> seen( n, false );
  std::vector<std::size_t> finish;
  for ( std::size_t root = 0; root < n; ++root )
  {
    if ( seen[root] || is_sequential( nl.cells()[root].kind ) )
      continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{ { root, 0 } };
    seen[root] = true;
    while ( !stack.empty() )
    {
      auto& [u, i] = stack.back();
      if ( i < succ[u].size() )
      {
        auto v = succ[u][i++];
        if ( !seen[v] )
        {
          seen[v] = true;
          stack.emplace_back( v, 0 );
        }
      }
      else
      {
        finish.push_back( u );
        stack.pop_back();
      }
    }
  }

  std::vector<int> comp( n, -1 );
  int next_comp = 0;
  std::vector<std::vector<std::size_t>> result;
  for ( auto it = finish.rbegin(); it != finish.rend(); ++it )
  {
    if ( comp[*it] != -1 )
      continue;
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack{ *it };
    comp[*it] = next_comp++;
    while ( !stack.empty() )
    {
      auto u = stack.back();
      stack.pop_back();
      members.push_back( u );
      for ( auto v : pred[u] )
      {
        if ( comp[v] == -1 )
        {
          comp[v] = comp[*it];
          stack.push_back( v );
        }
      }
    }
    bool const self_loop =
        members.size() == 1 && std::find( succ[members[0]].begin(), succ[members[0]].end(), members[0] ) != succ[members[0]].end();
    if ( members.size() > 1 || self_loop )
    {
      std::sort( members.begin(), members.end() );
      result.push_back( std::move( members ) );
    }
  }
  return result;
}

} // namespace detail

/// Check every structural invariant of the IR. Never throws; returns one
/// diagnostic per violation, or an empty list for a well-formed netlist.
inline std::vector<diagnostic> validate( netlist const& nl )
{
  std::vector<diagnostic> out;
  connectivity const conn( nl );

  std::unordered_set<std::string> names;
  for ( auto const& n : nl.nets() )
  {
    if ( !names.insert( n.name ).second )
      out.push_back( { diagnostic_kind::duplicate_name, "duplicate net name '" + n.name + "'" } );
  }
  names.clear();
  for ( auto const& c : nl.cells() )
  {
    if ( !names.insert( c.name ).second )
      out.push_back( { diagnostic_kind::duplicate_name, "duplicate cell name '" + c.name + "'" } );
  }
  names.clear();
  for ( auto const& o : nl.outputs() )
  {
    if ( !names.insert( o.name ).second )
      out.push_back( { diagnostic_kind::duplicate_name, "duplicate output port '" + o.name + "'" } );
  }

  for ( auto const& c : nl.cells() )
  {
    for ( std::size_t p = 0; p < c.pins.size(); ++p )
    {
      if ( c.pins[p].valid() )
        continue;
      // Flip-flop outputs may be left open; everything else must be bound.
      if ( is_sequential( c.kind ) && is_output_port( c.kind, p ) )
        continue;
      out.push_back( { diagnostic_kind::unbound_pin,
                       "pin " + c.name + "." + std::string( port_names( c.kind )[p] ) + " is not connected" } );
    }
  }

  for ( std::size_t i = 0; i < nl.num_nets(); ++i )
  {
    net_id const id{ i };
    auto const& n = nl.get( id );
    std::size_t const drivers =
        conn.cell_drivers( id ).size() + conn.input_driver_count( id ) + ( n.constant.has_value() ? 1 : 0 );
    if ( drivers > 1 )
      out.push_back( { diagnostic_kind::multiple_drivers,
                       "net '" + n.name + "' has " + std::to_string( drivers ) + " drivers" } );
    bool const read = !conn.readers( id ).empty() || !conn.output_readers( id ).empty();
    if ( drivers == 0 && read )
      out.push_back( { diagnostic_kind::floating_net, "net '" + n.name + "' is read but never driven" } );
  }

  for ( auto const& o : nl.outputs() )
  {
    if ( !o.net.valid() )
    {
      out.push_back( { diagnostic_kind::unbound_pin, "output port '" + o.name + "' is not connected" } );
      continue;
    }
    // An output port name shared with a different net would be ambiguous
    // once written out.
    if ( auto other = nl.find_net( o.name ); other && *other != o.net )
      out.push_back( { diagnostic_kind::port_conflict,
                       "output port '" + o.name + "' is bound to net '" + nl.get( o.net ).name +
                           "' but a different net carries its name" } );
  }

  for ( auto const& comp : detail::cyclic_components( nl, conn ) )
  {
    std::string msg = "combinational cycle through";
    for ( auto c : comp )
      msg += " " + nl.cells()[c].name;
    out.push_back( { diagnostic_kind::combinational_cycle, msg } );
  }
  return out;
}

/// Logic level per cell (indexed by cell id). Flip-flops sit at level 0
/// with the primary inputs; a combinational cell is one above its deepest
/// driver. Throws netlist_error on a combinational cycle.
inline std::vector<unsigned> levelize( netlist const& nl )
{
  connectivity const conn( nl );
  auto const succ = detail::comb_successors( nl, conn );
  std::size_t const n = nl.num_cells();
  std::vector<unsigned> level( n, 0 );
  std::vector<std::size_t> indegree( n, 0 );
  for ( std::size_t u = 0; u < n; ++u )
    for ( auto v : succ[u] )
      ++indegree[v];

  std::vector<std::size_t> ready;
  std::size_t comb_total = 0;
  for ( std::size_t u = 0; u < n; ++u )
  {
    if ( is_sequential( nl.cells()[u].kind ) )
      continue;
    ++comb_total;
    if ( indegree[u] == 0 )
    {
      ready.push_back( u );
      level[u] = 1;
    }
  }
  std::size_t visited = 0;
  while ( !ready.empty() )
  {
    auto u = ready.back();
    ready.pop_back();
    ++visited;
    for ( auto v : succ[u] )
    {
      level[v] = std::max( level[v], level[u] + 1 );
      if ( --indegree[v] == 0 )
        ready.push_back( v );
    }
  }
  if ( visited != comb_total )
    throw netlist_error( "levelize: netlist contains a combinational cycle" );
  return level;
}

/// Combinational cells in evaluation order (by level, then by cell id).
inline std::vector<cell_id> evaluation_order( netlist const& nl )
{
  auto const level = levelize( nl );
  std::vector<cell_id> order;
  nl.foreach_cell( [&]( cell_id id, cell const& c ) {
    if ( !is_sequential( c.kind ) )
      order.push_back( id );
  } );
  std::stable_sort( order.begin(), order.end(),
                    [&]( cell_id a, cell_id b ) { return level[a.get()] < level[b.get()]; } );
  return order;
}

/// Combinational cells reachable forward from `start` without crossing a
/// flip-flop. Sorted by cell id.
inline std::vector<cell_id> fanout_cone( netlist const& nl, net_id start )
{
  if ( !start.valid() || start.get() >= nl.num_nets() )
    throw netlist_error( "fanout_cone: unknown net" );
  connectivity const conn( nl );
  std::vector<bool> in_cone( nl.num_cells(), false );
  std::vector<net_id> frontier{ start };
  std::vector<bool> net_seen( nl.num_nets(), false );
  net_seen[start.get()] = true;
  while ( !frontier.empty() )
  {
    auto n = frontier.back();
    frontier.pop_back();
    for ( auto r : conn.readers( n ) )
    {
      auto const& c = nl.get( r.cell );
      if ( is_sequential( c.kind ) || in_cone[r.cell.get()] )
        continue;
      in_cone[r.cell.get()] = true;
      for ( std::size_t p = input_count( c.kind ); p < c.pins.size(); ++p )
      {
        auto out = c.pins[p];
        if ( out.valid() && !net_seen[out.get()] )
        {
          net_seen[out.get()] = true;
          frontier.push_back( out );
        }
      }
    }
  }
  std::vector<cell_id> cone;
  for ( std::size_t i = 0; i < in_cone.size(); ++i )
    if ( in_cone[i] )
      cone.emplace_back( i );
  return cone;
}

inline std::vector<cell_id> fanout_cone( netlist const& nl, std::string_view net_name )
{
  return fanout_cone( nl, nl.net_named( net_name ) );
}

/// Combinational cells reachable backward from `start` without crossing a
/// flip-flop. Sorted by cell id.
inline std::vector<cell_id> fanin_cone( netlist const& nl, net_id start )
{
  if ( !start.valid() || start.get() >= nl.num_nets() )
    throw netlist_error( "fanin_cone: unknown net" );
  connectivity const conn( nl );
  std::vector<bool> in_cone( nl.num_cells(), false );
  std::vector<net_id> frontier{ start };
  while ( !frontier.empty() )
  {
    auto n = frontier.back();
    frontier.pop_back();
    for ( auto d : conn.cell_drivers( n ) )
    {
      auto const& c = nl.get( d.cell );
      if ( is_sequential( c.kind ) || in_cone[d.cell.get()] )
        continue;
      in_cone[d.cell.get()] = true;
      for ( std::size_t p = 0; p < input_count( c.kind ); ++p )
        if ( c.pins[p].valid() )
          frontier.push_back( c.pins[p] );
    }
  }
  std::vector<cell_id> cone;
  for ( std::size_t i = 0; i < in_cone.size(); ++i )
    if ( in_cone[i] )
      cone.emplace_back( i );
  return cone;
}

inline std::vector<cell_id> fanin_cone( netlist const& nl, std::string_view net_name )
{
  return fanin_cone( nl, nl.net_named( net_name ) );
}

inline std::set<std::string> cell_names( netlist const& nl, std::vector<cell_id> const& cells )
{
  std::set<std::string> names;
  for ( auto c : cells )
    names.insert( nl.get( c ).name );
  return names;
}

/// Flip-flop cells in declaration order.
inline std::vector<cell_id> flip_flops( netlist const& nl )
{
  std::vector<cell_id> ffs;
  nl.foreach_cell( [&]( cell_id id, cell const& c ) {
    if ( is_sequential( c.kind ) )
      ffs.push_back( id );
  } );
  return ffs;
}

} // namespace scanpower
