#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "scanpower/atpg.hpp"
#include "scanpower/power.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"
#include "scanpower/transform.hpp"

namespace scanpower
{

using json = nlohmann::ordered_json;

inline std::string to_string( stitch_mode s ) { return s == stitch_mode::q ? "q" : "qb"; }

inline stitch_mode stitch_from_string( std::string_view s )
{
  if ( s == "q" )
    return stitch_mode::q;
  if ( s == "qb" )
    return stitch_mode::qb;
  throw std::invalid_argument( "unknown stitch mode '" + std::string( s ) + "'" );
}

inline json to_json( chain_map const& map )
{
  json chains = json::object();
  for ( auto const& c : map.chains )
    chains[c.name] = c.cells;
  return { { "stitch", to_string( map.stitch ) }, { "chains", chains } };
}

/// Chains must be named chain1..chainN; ports follow the same numbering.
inline chain_map chain_map_from_json( json const& j )
{
  chain_map map;
  map.stitch = stitch_from_string( j.at( "stitch" ).get<std::string>() );
  std::size_t k = 0;
  for ( auto const& [name, cells] : j.at( "chains" ).items() )
  {
    ++k;
    if ( name != chain_name( k ) )
      throw std::invalid_argument( "chain map: expected chain '" + chain_name( k ) + "', found '" + name + "'" );
    map.chains.push_back( { name, cells.get<std::vector<std::string>>(), scan_in_port( k ), scan_out_port( k ) } );
  }
  return map;
}

inline json to_json( toggle_counts const& c ) { return { { "shift", c.shift }, { "capture", c.capture } }; }

inline json to_json( toggle_stats const& stats )
{
  json nets = json::object();
  for ( auto const& [name, c] : stats.nets )
    nets[name] = to_json( c );
  return { { "nets", nets }, { "totals", to_json( stats.total() ) } };
}

inline json to_json( std::vector<fault> const& faults )
{
  json out = json::array();
  for ( auto const& f : faults )
    out.push_back( f.to_string() );
  return out;
}

inline json to_json( fault_report const& r )
{
  return { { "total_uncollapsed", r.total_uncollapsed },
           { "total_collapsed", r.total_collapsed },
           { "detected", r.detected.size() },
           { "untestable", to_json( r.untestable ) },
           { "aborted", to_json( r.aborted ) },
           { "undetected", to_json( r.undetected ) },
           { "test_coverage", r.test_coverage() },
           { "fault_coverage", r.fault_coverage() },
           { "patterns_used", r.patterns_used },
           { "random_patterns", r.random_patterns },
           { "deterministic_patterns", r.deterministic_patterns } };
}

inline json to_json( freeze_candidate const& c )
{
  return { { "cell", c.cell }, { "value", c.value ? 1 : 0 }, { "score", c.score } };
}

inline json to_json( freeze_plan const& plan )
{
  json entries = json::array();
  for ( auto const& e : plan.entries )
    entries.push_back( to_json( e ) );
  json evaluated = json::array();
  for ( auto const& e : plan.evaluated )
    evaluated.push_back( to_json( e ) );
  return { { "entries", entries }, { "evaluated", evaluated } };
}

inline json to_json( std::vector<pair_toggle_row> const& rows )
{
  json out = json::array();
  for ( auto const& r : rows )
    out.push_back(
        { { "src", r.src }, { "dst", r.dst }, { "gates", r.gates }, { "nets", r.nets }, { "toggles", r.toggles } } );
  return out;
}

inline json to_json( transform_log const& log )
{
  return { { "cell", log.cell },
           { "value", log.value ? 1 : 0 },
           { "gate", log.gate },
           { "gate_kind", std::string( library_name( log.gate_kind ) ) },
           { "net", log.net },
           { "rewired", log.rewired },
           { "warnings", log.warnings } };
}

} // namespace scanpower
