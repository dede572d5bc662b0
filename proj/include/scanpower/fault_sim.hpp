#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/fault_model.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/parallel.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"

namespace scanpower
{

/// Per fault, the index of the first pattern whose observed outputs or
/// unload differ from the fault-free run (definite against opposite
/// definite), if any.
struct detection
{
  std::vector<std::optional<std::size_t>> first_pattern;

  bool detected( std::size_t fault_index ) const { return first_pattern.at( fault_index ).has_value(); }

  std::size_t count() const
  {
    std::size_t n = 0;
    for ( auto const& p : first_pattern )
      n += p.has_value();
    return n;
  }

  bool operator==( detection const& ) const = default;
};

namespace detail
{

inline bool differs( char good, char faulty ) { return good != 'X' && faulty != 'X' && good != faulty; }

inline std::optional<std::size_t> first_difference( run_result const& good, run_result const& faulty )
{
  for ( std::size_t i = 0; i < good.results.size(); ++i )
  {
    auto const& g = good.results[i];
    auto const& f = faulty.results[i];
    for ( std::size_t b = 0; b < g.observed_po.size(); ++b )
      if ( differs( g.observed_po[b], f.observed_po[b] ) )
        return i;
    for ( std::size_t k = 0; k < g.observed_unload.size(); ++k )
      for ( std::size_t b = 0; b < g.observed_unload[k].size(); ++b )
        if ( differs( g.observed_unload[k][b], f.observed_unload[k][b] ) )
          return i;
  }
  return std::nullopt;
}

} // namespace detail

/// Reference fault simulation: one complete faulted rerun per fault.
inline detection fault_simulate_serial( netlist const& nl, chain_map const& chains,
                                        std::vector<scan_pattern> const& patterns, std::vector<fault> const& faults )
{
  detection d;
  d.first_pattern.resize( faults.size() );
  if ( patterns.empty() )
    return d;
  auto const good = run_patterns( nl, chains, patterns );
  for ( std::size_t i = 0; i < faults.size(); ++i )
  {
    sim_options opts;
    opts.injected = faults[i];
    d.first_pattern[i] = detail::first_difference( good, run_patterns( nl, chains, patterns, opts ) );
  }
  return d;
}

/// Bit-parallel fault simulator: lane 0 of every 64-bit word is the
/// fault-free machine, lanes 1..63 carry one fault each. Values are
/// dual-rail (is0, is1); X has neither bit set.
class parallel_fault_simulator
{
public:
  static constexpr std::size_t lanes = 63;

  parallel_fault_simulator( netlist const& nl, chain_map chains ) : nl_( &nl ), chains_( std::move( chains ) )
  {
    compile();
  }

  detection run( std::vector<scan_pattern> const& patterns, std::vector<fault> const& faults,
                 std::size_t jobs = 1 ) const
  {
    detection d;
    d.first_pattern.resize( faults.size() );
    if ( patterns.empty() || faults.empty() )
      return d;
    simulator const shape( *nl_, chains_ );
    for ( std::size_t i = 0; i < patterns.size(); ++i )
      check_pattern( shape, patterns[i], i );
    std::vector<std::vector<std::string>> raw_loads;
    for ( auto const& p : patterns )
    {
      std::vector<std::string> raw;
      for ( auto const& l : p.load )
        raw.push_back( compensate_load( l, chains_.stitch ) );
      raw_loads.push_back( std::move( raw ) );
    }
    std::size_t const batches = ( faults.size() + lanes - 1 ) / lanes;
    parallel_for( batches, jobs, [&]( std::size_t b ) {
      std::size_t const first = b * lanes;
      std::size_t const count = std::min( lanes, faults.size() - first );
      run_batch( patterns, raw_loads, faults, first, count, d.first_pattern );
    } );
    return d;
  }

private:
  static constexpr std::uint32_t none = std::numeric_limits<std::uint32_t>::max();

  struct word
  {
    std::uint64_t is0 = 0;
    std::uint64_t is1 = 0;
  };

  static constexpr word all( logic3 v )
  {
    switch ( v )
    {
    case logic3::zero:
      return { ~0ull, 0 };
    case logic3::one:
      return { 0, ~0ull };
    default:
      return {};
    }
  }

  struct force
  {
    std::uint64_t to0 = 0;
    std::uint64_t to1 = 0;

    word apply( word v ) const
    {
      std::uint64_t const m = to0 | to1;
      return { ( v.is0 & ~m ) | to0, ( v.is1 & ~m ) | to1 };
    }
  };

  struct gate
  {
    cell_kind kind;
    std::uint32_t in[2] = { none, none };
    std::uint32_t out = none;
    cell_id cell;
  };

  struct flip_flop
  {
    cell_id cell;
    cell_kind kind;
    std::uint32_t d = none, si = none, se = none, q = none, qb = none;
  };

  struct chain
  {
    std::uint32_t scan_in;
    std::uint32_t scan_out;
    std::size_t length;
  };

  struct batch_forces
  {
    std::vector<force> stem;   // per slot
    std::vector<force> gate;   // per gate input pin: 2 * gate + pin
    std::vector<force> ff;     // per flip-flop input: 3 * ff + {D, SI, SE}
  };

  static word eval( cell_kind kind, word a, word b )
  {
    switch ( kind )
    {
    case cell_kind::inv:
      return { a.is1, a.is0 };
    case cell_kind::buf:
      return a;
    case cell_kind::and2:
      return { a.is0 | b.is0, a.is1 & b.is1 };
    case cell_kind::nand2:
      return { a.is1 & b.is1, a.is0 | b.is0 };
    case cell_kind::or2:
      return { a.is0 & b.is0, a.is1 | b.is1 };
    case cell_kind::nor2:
      return { a.is1 | b.is1, a.is0 & b.is0 };
    case cell_kind::andb2:
      return { a.is0 | b.is1, a.is1 & b.is0 };
    default:
      return {};
    }
  }

  static word mux( word se, word si, word d )
  {
    return { ( se.is1 & si.is0 ) | ( se.is0 & d.is0 ) | ( si.is0 & d.is0 ),
             ( se.is1 & si.is1 ) | ( se.is0 & d.is1 ) | ( si.is1 & d.is1 ) };
  }

  static std::uint32_t slot_of( net_id n ) { return n.valid() ? n.value : none; }

  void compile()
  {
    netlist const& nl = *nl_;
    num_slots_ = nl.num_nets();
    for ( auto n : nl.inputs() )
      inputs_.push_back( n.value );
    for ( std::size_t i = 0; i < nl.num_nets(); ++i )
      if ( auto c = nl.get( net_id{ i } ).constant )
        constants_.emplace_back( static_cast<std::uint32_t>( i ), *c );
    se_ = nl.scan_enable() ? nl.scan_enable()->value : none;
    for ( auto n : functional_inputs( nl ) )
      pis_.push_back( n.value );
    for ( auto i : functional_outputs( nl ) )
      pos_.push_back( slot_of( nl.outputs()[i].net ) );
    for ( auto id : flip_flops( nl ) )
    {
      auto const& c = nl.get( id );
      auto const p = flip_flop_ports( c.kind );
      flip_flop ff{ id, c.kind };
      ff.d = slot_of( c.pins[p.d] );
      ff.q = slot_of( c.pins[p.q] );
      ff.qb = slot_of( c.pins[p.qb] );
      if ( p.si )
      {
        ff.si = slot_of( c.pins[*p.si] );
        ff.se = slot_of( c.pins[*p.se] );
      }
      ffs_.push_back( ff );
    }
    for ( auto id : evaluation_order( nl ) )
    {
      auto const& c = nl.get( id );
      gate g;
      g.kind = c.kind;
      g.cell = id;
      auto const n_in = input_count( c.kind );
      for ( std::size_t p = 0; p < n_in; ++p )
        g.in[p] = slot_of( c.pins[p] );
      g.out = slot_of( c.pins[n_in] );
      gate_of_cell_.resize( nl.num_cells(), none );
      gate_of_cell_[id.get()] = static_cast<std::uint32_t>( gates_.size() );
      gates_.push_back( g );
    }
    for ( auto const& c : chains_.chains )
    {
      auto in = nl.find_net( c.scan_in );
      auto out = nl.find_output( c.scan_out );
      if ( !in || !out )
        throw netlist_error( "fault simulation: scan ports of " + c.name + " not found" );
      chains_slots_.push_back( { in->value, slot_of( nl.outputs()[*out].net ), c.cells.size() } );
    }
    if ( !chains_.chains.empty() && se_ == none )
      throw netlist_error( "fault simulation: netlist has no scan enable" );
  }

  void add_fault( batch_forces& f, fault const& flt, std::uint64_t bit ) const
  {
    netlist const& nl = *nl_;
    auto set = [&]( force& target ) { ( stuck_value( flt.polarity ) ? target.to1 : target.to0 ) |= bit; };
    if ( flt.site.is_primary_input() )
    {
      auto n = nl.find_net( flt.site.port );
      if ( !n || !nl.is_input( *n ) )
        throw netlist_error( "fault site: no primary input '" + flt.site.port + "'" );
      set( f.stem[n->value] );
      return;
    }
    auto id = nl.cell_named( flt.site.cell );
    auto const& c = nl.get( id );
    auto port = port_index( c.kind, flt.site.port );
    if ( !port )
      throw netlist_error( "fault site: cell '" + c.name + "' has no port '" + flt.site.port + "'" );
    if ( is_output_port( c.kind, *port ) )
    {
      if ( c.pins[*port].valid() )
        set( f.stem[c.pins[*port].value] );
      return;
    }
    if ( !is_sequential( c.kind ) )
    {
      set( f.gate[2 * gate_of_cell_[id.get()] + *port] );
      return;
    }
    auto const p = flip_flop_ports( c.kind );
    std::size_t input = 0;
    if ( *port == p.d )
      input = 0;
    else if ( p.si && *port == *p.si )
      input = 1;
    else if ( p.se && *port == *p.se )
      input = 2;
    else
      return; // CLK carries no value
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
      if ( ffs_[i].cell == id )
        set( f.ff[3 * i + input] );
  }

  struct machine
  {
    std::vector<word> v;
    std::vector<word> ff;
  };

  void settle( machine& m, batch_forces const& f ) const
  {
    for ( auto slot : inputs_ )
      m.v[slot] = f.stem[slot].apply( m.v[slot] );
    for ( auto const& [slot, value] : constants_ )
      m.v[slot] = f.stem[slot].apply( all( to_logic( value ) ) );
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
    {
      if ( ffs_[i].q != none )
        m.v[ffs_[i].q] = f.stem[ffs_[i].q].apply( m.ff[i] );
      if ( ffs_[i].qb != none )
        m.v[ffs_[i].qb] = f.stem[ffs_[i].qb].apply( { m.ff[i].is1, m.ff[i].is0 } );
    }
    for ( std::size_t gi = 0; gi < gates_.size(); ++gi )
    {
      auto const& g = gates_[gi];
      word a = g.in[0] == none ? word{} : m.v[g.in[0]];
      word b = g.in[1] == none ? word{} : m.v[g.in[1]];
      a = f.gate[2 * gi].apply( a );
      b = f.gate[2 * gi + 1].apply( b );
      if ( g.out != none )
        m.v[g.out] = f.stem[g.out].apply( eval( g.kind, a, b ) );
    }
  }

  void clock( machine& m, batch_forces const& f ) const
  {
    std::vector<word> next( ffs_.size() );
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
    {
      auto const& ff = ffs_[i];
      auto read = [&]( std::uint32_t slot, std::size_t input ) {
        return f.ff[3 * i + input].apply( slot == none ? word{} : m.v[slot] );
      };
      auto const d = read( ff.d, 0 );
      next[i] = ff.kind == cell_kind::sff ? mux( read( ff.se, 2 ), read( ff.si, 1 ), d ) : d;
    }
    m.ff = std::move( next );
    settle( m, f );
  }

  void run_batch( std::vector<scan_pattern> const& patterns, std::vector<std::vector<std::string>> const& raw_loads,
                  std::vector<fault> const& faults, std::size_t first, std::size_t count,
                  std::vector<std::optional<std::size_t>>& out ) const
  {
    batch_forces f;
    f.stem.resize( num_slots_ );
    f.gate.resize( 2 * gates_.size() );
    f.ff.resize( 3 * ffs_.size() );
    for ( std::size_t i = 0; i < count; ++i )
      add_fault( f, faults[first + i], 1ull << ( i + 1 ) );
    std::uint64_t const fault_lanes = count == 63 ? ~1ull : ( ( 1ull << ( count + 1 ) ) - 2 );

    machine m;
    m.v.assign( num_slots_, word{} );
    m.ff.assign( ffs_.size(), word{} );
    settle( m, f );

    std::uint64_t detected = 0;
    auto observe = [&]( std::uint32_t slot, std::size_t pattern ) {
      if ( slot == none )
        return;
      auto const v = m.v[slot];
      std::uint64_t const g0 = ( v.is0 & 1 ) ? ~0ull : 0;
      std::uint64_t const g1 = ( v.is1 & 1 ) ? ~0ull : 0;
      auto const fresh = ( ( g1 & v.is0 ) | ( g0 & v.is1 ) ) & fault_lanes & ~detected;
      if ( !fresh )
        return;
      detected |= fresh;
      for ( std::size_t i = 0; i < count; ++i )
        if ( fresh & ( 1ull << ( i + 1 ) ) )
          out[first + i] = pattern;
    };

    std::size_t const L = chains_.max_length();
    auto shift = [&]( std::vector<std::string> const* raw, std::optional<std::size_t> unloading ) {
      for ( std::size_t t = 0; t < L; ++t )
      {
        if ( unloading )
          for ( auto const& c : chains_slots_ )
            if ( t < c.length )
              observe( c.scan_out, *unloading );
        m.v[se_] = all( logic3::one );
        for ( std::size_t k = 0; k < chains_slots_.size(); ++k )
        {
          std::size_t const pos = L - 1 - t;
          logic3 bit = logic3::zero;
          if ( raw && pos < chains_slots_[k].length )
            bit = logic_from_char( ( *raw )[k][pos] );
          m.v[chains_slots_[k].scan_in] = all( bit );
        }
        settle( m, f );
        clock( m, f );
      }
    };

    for ( std::size_t p = 0; p < patterns.size(); ++p )
    {
      if ( !chains_slots_.empty() )
        shift( &raw_loads[p], p > 0 ? std::optional{ p - 1 } : std::nullopt );
      if ( se_ != none )
        m.v[se_] = all( logic3::zero );
      for ( std::size_t i = 0; i < pis_.size(); ++i )
        m.v[pis_[i]] = all( logic_from_char( patterns[p].pi[i] ) );
      settle( m, f );
      for ( auto slot : pos_ )
        observe( slot, p );
      clock( m, f );
    }
    if ( !chains_slots_.empty() )
      shift( nullptr, patterns.size() - 1 );
  }

  netlist const* nl_;
  chain_map chains_;
  std::size_t num_slots_ = 0;
  std::vector<std::uint32_t> inputs_;
  std::vector<std::pair<std::uint32_t, bool>> constants_;
  std::uint32_t se_ = none;
  std::vector<std::uint32_t> pis_;
  std::vector<std::uint32_t> pos_;
  std::vector<flip_flop> ffs_;
  std::vector<gate> gates_;
  std::vector<std::uint32_t> gate_of_cell_;
  std::vector<chain> chains_slots_;
};

/// Fault simulation of a pattern set. Equal to fault_simulate_serial; the
/// result does not depend on `jobs`.
inline detection fault_simulate( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> const& patterns,
                                 std::vector<fault> const& faults, std::size_t jobs = 1 )
{
  return parallel_fault_simulator( nl, chains ).run( patterns, faults, jobs );
}

} // namespace scanpower
