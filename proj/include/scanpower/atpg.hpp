#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scanpower/fault.hpp"
#include "scanpower/fault_sim.hpp"
#include "scanpower/podem.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"

namespace scanpower
{

struct atpg_config
{
  std::uint64_t seed = 0;
  std::size_t random_budget = 64;
  std::size_t backtrack_limit = 10000;
  std::size_t jobs = 1;
};

struct fault_report
{
  std::size_t total_uncollapsed = 0;
  std::size_t total_collapsed = 0;
  std::vector<fault> detected;
  std::vector<fault> untestable;
  std::vector<fault> aborted;
  std::vector<fault> undetected; // testable or aborted, but not covered
  std::size_t patterns_used = 0;
  std::size_t random_patterns = 0;
  std::size_t deterministic_patterns = 0;

  /// Detected over collapsed faults not proven untestable; 100 when that
  /// set is empty.
  double test_coverage() const
  {
    auto const testable = total_collapsed - untestable.size();
    return testable == 0 ? 100.0 : 100.0 * static_cast<double>( detected.size() ) / static_cast<double>( testable );
  }

  /// Detected over all collapsed faults.
  double fault_coverage() const
  {
    return total_collapsed == 0 ? 100.0
                                : 100.0 * static_cast<double>( detected.size() ) / static_cast<double>( total_collapsed );
  }
};

struct atpg_result
{
  std::vector<scan_pattern> patterns;
  fault_report report;
};

namespace detail
{

/// Raw-bit source for pattern bits: one 64-bit draw serves 64 bits.
class bit_source
{
public:
  explicit bit_source( std::uint64_t seed ) : rng_( seed ) {}

  char next()
  {
    if ( left_ == 0 )
    {
      word_ = rng_();
      left_ = 64;
    }
    --left_;
    char const c = ( word_ & 1 ) ? '1' : '0';
    word_ >>= 1;
    return c;
  }

  void fill( std::string& bits )
  {
    for ( auto& c : bits )
      if ( c == 'X' )
        c = next();
  }

private:
  std::mt19937_64 rng_;
  std::uint64_t word_ = 0;
  int left_ = 0;
};

inline scan_pattern random_pattern( chain_map const& chains, std::size_t n_pi, bit_source& bits )
{
  scan_pattern p;
  for ( auto const& c : chains.chains )
  {
    p.load.emplace_back( c.cells.size(), 'X' );
    bits.fill( p.load.back() );
  }
  p.pi.assign( n_pi, 'X' );
  bits.fill( p.pi );
  return p;
}

} // namespace detail

/// Random patterns with fault dropping, then PODEM for every fault still
/// undetected. Deterministic for a given seed, and independent of `jobs`.
inline atpg_result generate_patterns( netlist const& nl, chain_map const& chains, atpg_config const& config = {} )
{
  auto const universe = enumerate_faults( nl );
  auto const collapsed = collapse_faults( nl, universe );
  std::size_t const n_pi = functional_inputs( nl ).size();
  parallel_fault_simulator const fsim( nl, chains );
  detail::bit_source bits( config.seed );

  atpg_result out;
  std::vector<fault> remaining = collapsed;
  auto drop = [&]( scan_pattern const& p ) {
    auto const d = fsim.run( { p }, remaining, config.jobs );
    std::vector<fault> still;
    for ( std::size_t i = 0; i < remaining.size(); ++i )
      if ( !d.detected( i ) )
        still.push_back( remaining[i] );
    bool const useful = still.size() != remaining.size();
    remaining = std::move( still );
    return useful;
  };

  for ( std::size_t r = 0; r < config.random_budget && !remaining.empty(); ++r )
  {
    auto p = detail::random_pattern( chains, n_pi, bits );
    if ( drop( p ) )
    {
      out.patterns.push_back( std::move( p ) );
      ++out.report.random_patterns;
    }
  }

  podem_engine const engine( nl, chains );
  podem_options const popts{ config.backtrack_limit };
  std::vector<fault> const targets = remaining;
  for ( auto const& f : targets )
  {
    if ( !std::binary_search( remaining.begin(), remaining.end(), f ) )
      continue;
    auto const r = engine.run( f, popts );
    if ( r.status == podem_status::untestable )
    {
      out.report.untestable.push_back( f );
      continue;
    }
    if ( r.status == podem_status::aborted )
    {
      out.report.aborted.push_back( f );
      continue;
    }
    auto p = r.pattern;
    for ( auto& l : p.load )
      bits.fill( l );
    bits.fill( p.pi );
    if ( drop( p ) )
    {
      out.patterns.push_back( std::move( p ) );
      ++out.report.deterministic_patterns;
    }
    if ( std::binary_search( remaining.begin(), remaining.end(), f ) )
      out.report.aborted.push_back( f );
  }

  out.patterns = with_expected_values( nl, chains, std::move( out.patterns ) );

  auto const final_detection = fsim.run( out.patterns, collapsed, config.jobs );
  auto& rep = out.report;
  rep.total_uncollapsed = universe.size();
  rep.total_collapsed = collapsed.size();
  rep.patterns_used = out.patterns.size();
  for ( std::size_t i = 0; i < collapsed.size(); ++i )
  {
    if ( final_detection.detected( i ) )
      rep.detected.push_back( collapsed[i] );
    else if ( !std::binary_search( rep.untestable.begin(), rep.untestable.end(), collapsed[i] ) )
      rep.undetected.push_back( collapsed[i] );
  }
  std::vector<fault> aborted;
  for ( auto const& f : rep.aborted )
    if ( !std::binary_search( rep.detected.begin(), rep.detected.end(), f ) )
      aborted.push_back( f );
  std::sort( aborted.begin(), aborted.end() );
  rep.aborted = std::move( aborted );
  return out;
}

/// Coverage of an existing pattern set against the collapsed universe.
inline fault_report grade_patterns( netlist const& nl, chain_map const& chains,
                                    std::vector<scan_pattern> const& patterns, std::size_t jobs = 1,
                                    std::vector<fault> const& known_untestable = {} )
{
  auto const universe = enumerate_faults( nl );
  auto const collapsed = collapse_faults( nl, universe );
  auto const d = fault_simulate( nl, chains, patterns, collapsed, jobs );
  fault_report rep;
  rep.total_uncollapsed = universe.size();
  rep.total_collapsed = collapsed.size();
  rep.patterns_used = patterns.size();
  for ( std::size_t i = 0; i < collapsed.size(); ++i )
  {
    if ( d.detected( i ) )
      rep.detected.push_back( collapsed[i] );
    else if ( std::find( known_untestable.begin(), known_untestable.end(), collapsed[i] ) != known_untestable.end() )
      rep.untestable.push_back( collapsed[i] );
    else
      rep.undetected.push_back( collapsed[i] );
  }
  return rep;
}

} // namespace scanpower
