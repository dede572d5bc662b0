#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/parallel.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"
#include "scanpower/transform.hpp"

namespace scanpower
{

namespace detail
{

inline net_id flip_flop_pin( netlist const& nl, std::string_view cell, bool q_side )
{
  auto const& c = nl.get( nl.cell_named( cell ) );
  if ( !is_sequential( c.kind ) )
    throw netlist_error( "'" + std::string( cell ) + "' is not a flip-flop" );
  auto const p = flip_flop_ports( c.kind );
  return c.pins[q_side ? p.q : p.d];
}

} // namespace detail

/// Combinational cells on paths from `src`'s Q to `dst`'s D, in level
/// order (ties by cell id).
inline std::vector<cell_id> path_gates( netlist const& nl, std::string_view src, std::string_view dst )
{
  auto const q = detail::flip_flop_pin( nl, src, true );
  auto const d = detail::flip_flop_pin( nl, dst, false );
  if ( !q.valid() || !d.valid() )
    return {};
  auto const out = fanout_cone( nl, q );
  auto const in = fanin_cone( nl, d );
  std::vector<cell_id> both;
  std::set_intersection( out.begin(), out.end(), in.begin(), in.end(), std::back_inserter( both ) );
  auto const level = levelize( nl );
  std::stable_sort( both.begin(), both.end(),
                    [&]( cell_id a, cell_id b ) { return level[a.get()] < level[b.get()]; } );
  return both;
}

/// Output net name of a combinational cell.
inline std::string output_net_name( netlist const& nl, cell_id id )
{
  auto const& c = nl.get( id );
  auto const n = c.pins[input_count( c.kind )];
  return n.valid() ? nl.get( n ).name : std::string{};
}

struct pair_toggle_row
{
  std::string src;
  std::string dst;
  std::vector<std::string> gates; // cell names
  std::vector<std::string> nets;  // their output nets
  std::uint64_t toggles = 0;
};

/// Shift toggles per ordered flip-flop pair with a nonempty path set.
/// A net shared by several pairs counts in each of them.
inline std::vector<pair_toggle_row> toggle_table( netlist const& nl, toggle_stats const& stats )
{
  std::vector<pair_toggle_row> rows;
  auto const ffs = flip_flops( nl );
  for ( auto a : ffs )
    for ( auto b : ffs )
    {
      auto const& src = nl.get( a ).name;
      auto const& dst = nl.get( b ).name;
      auto const gates = path_gates( nl, src, dst );
      if ( gates.empty() )
        continue;
      pair_toggle_row row{ src, dst, {}, {}, 0 };
      for ( auto g : gates )
      {
        row.gates.push_back( nl.get( g ).name );
        row.nets.push_back( output_net_name( nl, g ) );
        for ( auto const& [net, counts] : stats.nets )
          if ( net == row.nets.back() )
            row.toggles += counts.shift;
      }
      rows.push_back( std::move( row ) );
    }
  return rows;
}

inline std::vector<pair_toggle_row> toggle_table( netlist const& nl, chain_map const& chains,
                                                  std::vector<scan_pattern> const& patterns )
{
  return toggle_table( nl, run_patterns( nl, chains, patterns ).toggles );
}

/// Aligned text rendering: path, gates involved (by output net), toggles.
inline std::string render_toggle_table( std::vector<pair_toggle_row> const& rows )
{
  std::vector<std::array<std::string, 3>> cells{ { "Path", "Gates Involved", "Toggles" } };
  for ( auto const& r : rows )
  {
    std::string gates;
    for ( std::size_t i = 0; i < r.nets.size(); ++i )
      gates += ( i ? ", " : "" ) + r.nets[i];
    cells.push_back( { r.src + " - " + r.dst, gates, std::to_string( r.toggles ) } );
  }
  std::array<std::size_t, 3> width{};
  for ( auto const& row : cells )
    for ( std::size_t i = 0; i < 3; ++i )
      width[i] = std::max( width[i], row[i].size() );
  std::string out;
  auto line = [&]( std::array<std::string, 3> const& row ) {
    out += row[0] + std::string( width[0] - row[0].size(), ' ' ) + " | ";
    out += row[1] + std::string( width[1] - row[1].size(), ' ' ) + " | ";
    out += std::string( width[2] - row[2].size(), ' ' ) + row[2] + "\n";
  };
  line( cells[0] );
  out += std::string( width[0], '-' ) + "-+-" + std::string( width[1], '-' ) + "-+-" + std::string( width[2], '-' ) + "\n";
  for ( std::size_t i = 1; i < cells.size(); ++i )
    line( cells[i] );
  return out;
}

inline std::uint64_t total_shift_toggles( netlist const& nl, chain_map const& chains,
                                          std::vector<scan_pattern> const& patterns, sim_options options = {} )
{
  if ( patterns.empty() )
    return 0;
  return run_patterns( nl, chains, patterns, std::move( options ) ).toggles.total().shift;
}

namespace detail
{
inline void require_scan_cell( netlist const& nl, std::string_view cell )
{
  if ( nl.get( nl.cell_named( cell ) ).kind != cell_kind::sff )
    throw netlist_error( "'" + std::string( cell ) + "' is not a scan cell" );
}
} // namespace detail

/// Shift toggles saved by freezing `cell` at `value`, measured on the
/// freeze-inserted netlist. Negative when freezing costs toggles.
inline std::int64_t sensitivity( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> const& patterns,
                                 std::string const& cell, bool value )
{
  detail::require_scan_cell( nl, cell );
  if ( patterns.empty() )
    return 0;
  auto const base = total_shift_toggles( nl, chains, patterns );
  auto const frozen = insert_freeze( nl, cell, value );
  return static_cast<std::int64_t>( base ) -
         static_cast<std::int64_t>( total_shift_toggles( frozen.design, chains, patterns ) );
}

/// Same quantity through the simulator's freeze override, without
/// rewriting the netlist.
inline std::int64_t sensitivity_forced( netlist const& nl, chain_map const& chains,
                                        std::vector<scan_pattern> const& patterns, std::string const& cell, bool value )
{
  detail::require_scan_cell( nl, cell );
  if ( patterns.empty() )
    return 0;
  auto const base = total_shift_toggles( nl, chains, patterns );
  sim_options opts;
  opts.freezes.push_back( { cell, value } );
  return static_cast<std::int64_t>( base ) -
         static_cast<std::int64_t>( total_shift_toggles( nl, chains, patterns, opts ) );
}

struct freeze_candidate
{
  std::string cell;
  bool value = false;
  std::int64_t score = 0;

  bool operator==( freeze_candidate const& ) const = default;
};

struct freeze_plan
{
  std::vector<freeze_candidate> entries;
  /// Every evaluated (cell, value), in cell order with value 0 first.
  std::vector<freeze_candidate> evaluated;
};

/// Rank scan cells by the better of their two freeze sensitivities.
/// Ties between values pick 0; ties between cells go by name.
inline freeze_plan rank_cells( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> const& patterns,
                               std::size_t top_k, std::size_t jobs = 1 )
{
  if ( top_k == 0 )
    throw std::invalid_argument( "rank_cells: top_k must be at least 1" );
  std::vector<std::string> cells;
  for ( auto id : flip_flops( nl ) )
    if ( nl.get( id ).kind == cell_kind::sff )
      cells.push_back( nl.get( id ).name );

  freeze_plan plan;
  plan.evaluated.resize( 2 * cells.size() );
  auto const base = total_shift_toggles( nl, chains, patterns );
  parallel_for( plan.evaluated.size(), jobs, [&]( std::size_t i ) {
    auto const& cell = cells[i / 2];
    bool const value = i % 2 == 1;
    std::int64_t score = 0;
    if ( !patterns.empty() )
    {
      auto const frozen = insert_freeze( nl, cell, value );
      score = static_cast<std::int64_t>( base ) -
              static_cast<std::int64_t>( total_shift_toggles( frozen.design, chains, patterns ) );
    }
    plan.evaluated[i] = { cell, value, score };
  } );

  for ( std::size_t c = 0; c < cells.size(); ++c )
  {
    auto const& zero = plan.evaluated[2 * c];
    auto const& one = plan.evaluated[2 * c + 1];
    plan.entries.push_back( one.score > zero.score ? one : zero );
  }
  std::sort( plan.entries.begin(), plan.entries.end(), []( auto const& a, auto const& b ) {
    return a.score != b.score ? a.score > b.score : a.cell < b.cell;
  } );
  if ( plan.entries.size() > top_k )
    plan.entries.resize( top_k );
  return plan;
}

/// Simulation-free proxy: size of the combinational fanout cone of Q.
inline std::size_t structural_score( netlist const& nl, std::string_view cell )
{
  auto const q = detail::flip_flop_pin( nl, cell, true );
  return q.valid() ? fanout_cone( nl, q ).size() : 0;
}

} // namespace scanpower
