#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/fault_model.hpp"
#include "scanpower/logic.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/scan.hpp"
#include "scanpower/sim.hpp"

namespace scanpower
{

enum class podem_status
{
  detected,
  untestable,
  aborted
};

struct podem_result
{
  podem_status status = podem_status::untestable;
  /// Valid when detected; unassigned inputs and states are X and the
  /// expected values are left empty.
  scan_pattern pattern;
  std::size_t backtracks = 0;
};

struct podem_options
{
  std::size_t backtrack_limit = 10000;
};

/// PODEM over the capture frame of a scan design: functional inputs and
/// scan-cell states are the decision variables, functional outputs and
/// flip-flop D pins are observed.
class podem_engine
{
public:
  podem_engine( netlist const& nl, chain_map chains ) : nl_( &nl ), chains_( std::move( chains ) ) { compile(); }

  podem_result run( fault const& f, podem_options const& options = {} ) const { return search( f, options ); }

private:
  static constexpr std::uint32_t none = std::numeric_limits<std::uint32_t>::max();

  struct gate
  {
    cell_kind kind;
    std::uint32_t in[2] = { none, none };
    std::uint32_t out = none;
  };

  struct state_var
  {
    std::size_t chain, position;
    std::uint32_t q = none, qb = none;
  };

  /// Where a net's value comes from, for backtrace.
  struct source
  {
    enum class type : std::uint8_t
    {
      none,
      pi,
      state_q,
      state_qb,
      gate
    } kind = type::none;
    std::size_t index = 0;
  };

  struct frame
  {
    std::vector<logic3> good;
    std::vector<logic3> bad;
  };

  struct injected
  {
    std::uint32_t stem = none;     // forced net
    std::uint32_t gate = none;     // forced gate input
    int gate_pin = 0;
    std::uint32_t ff_d = none;     // forced FF D pin (index into d_pins_)
    logic3 value = logic3::x;
    std::uint32_t site_net = none; // net whose good value activates the fault
    /// Scan-path faults: faulty-machine states of cells loaded through the
    /// site, and the value the unload reports for cells shifted out
    /// through it (indexed like d_pins_).
    std::vector<std::pair<std::size_t, logic3>> bad_states;
    std::vector<std::pair<std::size_t, logic3>> masked_d;
  };

  static std::uint32_t slot_of( net_id n ) { return n.valid() ? n.value : none; }

  void compile()
  {
    netlist const& nl = *nl_;
    sources_.resize( nl.num_nets() );
    for ( auto n : functional_inputs( nl ) )
    {
      sources_[n.get()] = { source::type::pi, pis_.size() };
      pis_.push_back( n.value );
    }
    for ( std::size_t i = 0; i < nl.num_nets(); ++i )
      if ( auto c = nl.get( net_id{ i } ).constant )
        constants_.emplace_back( static_cast<std::uint32_t>( i ), *c );
    for ( std::size_t k = 0; k < chains_.chains.size(); ++k )
      for ( std::size_t p = 0; p < chains_.chains[k].cells.size(); ++p )
      {
        auto const& c = nl.get( nl.cell_named( chains_.chains[k].cells[p] ) );
        auto const ports = flip_flop_ports( c.kind );
        state_var s{ k, p, slot_of( c.pins[ports.q] ), slot_of( c.pins[ports.qb] ) };
        if ( s.q != none )
          sources_[s.q] = { source::type::state_q, states_.size() };
        if ( s.qb != none )
          sources_[s.qb] = { source::type::state_qb, states_.size() };
        states_.push_back( s );
      }
    for ( auto id : flip_flops( nl ) )
    {
      auto const& c = nl.get( id );
      d_cells_.push_back( c.name );
      d_pins_.push_back( slot_of( c.pins[flip_flop_ports( c.kind ).d] ) );
    }
    for ( auto i : functional_outputs( nl ) )
      if ( nl.outputs()[i].net.valid() )
        pos_.push_back( nl.outputs()[i].net.value );
    for ( auto id : evaluation_order( nl ) )
    {
      auto const& c = nl.get( id );
      gate g{ c.kind };
      auto const n_in = input_count( c.kind );
      for ( std::size_t p = 0; p < n_in; ++p )
        g.in[p] = slot_of( c.pins[p] );
      g.out = slot_of( c.pins[n_in] );
      if ( g.out != none )
        sources_[g.out] = { source::type::gate, gates_.size() };
      gate_index_.emplace_back( c.name, gates_.size() );
      gates_.push_back( g );
    }
    std::sort( gate_index_.begin(), gate_index_.end() );
  }

  /// (chain, position, via QB) when the site is a scan cell output that
  /// also carries the scan path.
  std::optional<std::tuple<std::size_t, std::size_t, bool>> chain_path_fault( fault const& f ) const
  {
    if ( f.site.is_primary_input() )
      return std::nullopt;
    auto id = nl_->find_cell( f.site.cell );
    if ( !id || nl_->get( *id ).kind != cell_kind::sff )
      return std::nullopt;
    bool const on_q = f.site.port == "Q";
    bool const on_qb = f.site.port == "QB";
    if ( ( !on_q || chains_.stitch != stitch_mode::q ) && ( !on_qb || chains_.stitch != stitch_mode::qb ) )
      return std::nullopt;
    for ( std::size_t k = 0; k < chains_.chains.size(); ++k )
    {
      auto const& cells = chains_.chains[k].cells;
      for ( std::size_t i = 0; i < cells.size(); ++i )
        if ( cells[i] == f.site.cell )
          return std::tuple{ k, i, on_qb };
    }
    return std::nullopt;
  }

  injected locate( fault const& f ) const
  {
    netlist const& nl = *nl_;
    injected inj;
    inj.value = to_logic( stuck_value( f.polarity ) );
    if ( f.site.is_primary_input() )
    {
      auto n = nl.find_net( f.site.port );
      if ( !n || !nl.is_input( *n ) )
        throw netlist_error( "fault site: no primary input '" + f.site.port + "'" );
      inj.stem = inj.site_net = n->value;
      return inj;
    }
    auto const& c = nl.get( nl.cell_named( f.site.cell ) );
    auto port = port_index( c.kind, f.site.port );
    if ( !port )
      throw netlist_error( "fault site: cell '" + c.name + "' has no port '" + f.site.port + "'" );
    inj.site_net = slot_of( c.pins[*port] );
    if ( is_output_port( c.kind, *port ) )
    {
      inj.stem = inj.site_net;
      if ( auto pos = chain_path_fault( f ) )
        add_scan_path_effects( inj, *pos, stuck_value( f.polarity ) );
    }
    else if ( is_sequential( c.kind ) )
    {
      if ( *port != flip_flop_ports( c.kind ).d )
        throw netlist_error( "podem: unsupported fault site " + f.to_string() );
      for ( std::size_t i = 0; i < d_cells_.size(); ++i )
        if ( d_cells_[i] == c.name )
          inj.ff_d = static_cast<std::uint32_t>( i );
    }
    else
    {
      auto it = std::lower_bound( gate_index_.begin(), gate_index_.end(), std::pair{ c.name, std::size_t{ 0 } } );
      inj.gate = static_cast<std::uint32_t>( it->second );
      inj.gate_pin = static_cast<int>( *port );
    }
    return inj;
  }

  /// A stuck scan-path output at chain position i fixes the faulty load
  /// of every later cell, and the unload of cells 0..i reads the stuck
  /// value (inverted once per QB stage in between).
  void add_scan_path_effects( injected& inj, std::tuple<std::size_t, std::size_t, bool> const& pos, bool v ) const
  {
    auto const [k, i, on_qb] = pos;
    auto const& cells = chains_.chains[k].cells;
    bool const qb = chains_.stitch == stitch_mode::qb;
    for ( std::size_t s = 0; s < states_.size(); ++s )
    {
      auto const& st = states_[s];
      if ( st.chain != k || st.position <= i )
        continue;
      bool const flip = qb && ( st.position - i - 1 ) % 2 == 1;
      inj.bad_states.emplace_back( s, to_logic( v != flip ) );
    }
    for ( std::size_t j = 0; j <= i; ++j )
    {
      bool const parity = qb && ( i - j ) % 2 == 1;
      bool const reported = on_qb ? ( !v ) != parity : v != parity;
      for ( std::size_t d = 0; d < d_cells_.size(); ++d )
        if ( d_cells_[d] == cells[j] && d_pins_[d] != none )
          inj.masked_d.emplace_back( d, to_logic( reported ) );
    }
  }

  void simulate( frame& fr, std::vector<logic3> const& pi, std::vector<logic3> const& st, injected const& inj ) const
  {
    fr.good.assign( nl_->num_nets(), logic3::x );
    fr.bad.assign( nl_->num_nets(), logic3::x );
    auto set = [&]( std::uint32_t slot, logic3 v ) {
      fr.good[slot] = v;
      fr.bad[slot] = slot == inj.stem ? inj.value : v;
    };
    if ( inj.stem != none )
      fr.bad[inj.stem] = inj.value;
    if ( auto se = nl_->scan_enable() )
      set( se->value, logic3::zero );
    for ( std::size_t i = 0; i < pis_.size(); ++i )
      set( pis_[i], pi[i] );
    for ( auto const& [slot, v] : constants_ )
      set( slot, to_logic( v ) );
    for ( std::size_t i = 0; i < states_.size(); ++i )
    {
      if ( states_[i].q != none )
        set( states_[i].q, st[i] );
      if ( states_[i].qb != none )
        set( states_[i].qb, ~st[i] );
    }
    for ( auto const& [i, v] : inj.bad_states )
    {
      if ( states_[i].q != none )
        fr.bad[states_[i].q] = v;
      if ( states_[i].qb != none )
        fr.bad[states_[i].qb] = ~v;
    }
    for ( std::size_t g = 0; g < gates_.size(); ++g )
    {
      auto const& gt = gates_[g];
      auto read = [&]( std::vector<logic3> const& v, int pin ) {
        return gt.in[pin] == none ? logic3::x : v[gt.in[pin]];
      };
      auto const good = eval_comb( gt.kind, read( fr.good, 0 ), read( fr.good, 1 ) );
      auto a = read( fr.bad, 0 );
      auto b = read( fr.bad, 1 );
      if ( g == inj.gate )
        ( inj.gate_pin == 0 ? a : b ) = inj.value;
      if ( gt.out != none )
      {
        fr.good[gt.out] = good;
        fr.bad[gt.out] = gt.out == inj.stem ? inj.value : eval_comb( gt.kind, a, b );
      }
    }
  }

  static bool unresolved( frame const& fr, std::uint32_t net )
  {
    return fr.good[net] == logic3::x || fr.bad[net] == logic3::x;
  }

  static bool effect( logic3 g, logic3 b ) { return is_definite( g ) && is_definite( b ) && g != b; }

  bool detected( frame const& fr, injected const& inj ) const
  {
    for ( auto slot : pos_ )
      if ( effect( fr.good[slot], fr.bad[slot] ) )
        return true;
    for ( auto const& [i, v] : inj.masked_d )
      if ( effect( fr.good[d_pins_[i]], v ) )
        return true;
    for ( std::size_t i = 0; i < d_pins_.size(); ++i )
    {
      if ( d_pins_[i] == none || masked( inj, i ) )
        continue;
      auto const bad = i == inj.ff_d ? inj.value : fr.bad[d_pins_[i]];
      if ( effect( fr.good[d_pins_[i]], bad ) )
        return true;
    }
    return false;
  }

  static bool masked( injected const& inj, std::size_t d )
  {
    for ( auto const& m : inj.masked_d )
      if ( m.first == d )
        return true;
    return false;
  }

  /// Next (net, value) goal, or nothing when the search cannot progress:
  /// advance the D-frontier (deepest gate first), else activate a fault
  /// effect that is still open.
  std::optional<std::pair<std::uint32_t, logic3>> objective( frame const& fr, std::vector<logic3> const& st,
                                                             injected const& inj ) const
  {
    for ( std::size_t g = gates_.size(); g-- > 0; )
    {
      auto const& gt = gates_[g];
      if ( gt.out == none )
        continue;
      if ( is_definite( fr.good[gt.out] ) && is_definite( fr.bad[gt.out] ) )
        continue;
      auto n_in = input_count( gt.kind );
      bool has_effect = false;
      for ( std::size_t p = 0; p < n_in; ++p )
      {
        if ( gt.in[p] == none )
          continue;
        auto bad = fr.bad[gt.in[p]];
        if ( g == inj.gate && static_cast<int>( p ) == inj.gate_pin )
          bad = inj.value;
        if ( effect( fr.good[gt.in[p]], bad ) )
          has_effect = true;
      }
      if ( !has_effect )
        continue;
      for ( std::size_t p = 0; p < n_in; ++p )
      {
        if ( gt.in[p] == none || !unresolved( fr, gt.in[p] ) )
          continue;
        return std::pair{ gt.in[p], non_controlling( gt.kind, p ) };
      }
    }
    if ( inj.site_net != none && fr.good[inj.site_net] == logic3::x )
      return std::pair{ inj.site_net, ~inj.value };
    for ( auto const& [i, v] : inj.bad_states )
      if ( st[i] == logic3::x )
      {
        if ( states_[i].q != none )
          return std::pair{ states_[i].q, ~v };
        if ( states_[i].qb != none )
          return std::pair{ states_[i].qb, v };
      }
    for ( auto const& [d, v] : inj.masked_d )
      if ( fr.good[d_pins_[d]] == logic3::x )
        return std::pair{ d_pins_[d], ~v };
    return std::nullopt;
  }

  static logic3 non_controlling( cell_kind kind, std::size_t pin )
  {
    switch ( kind )
    {
    case cell_kind::and2:
    case cell_kind::nand2:
      return logic3::one;
    case cell_kind::andb2:
      return pin == 0 ? logic3::one : logic3::zero;
    default:
      return logic3::zero;
    }
  }

  struct decision
  {
    bool is_state;
    std::size_t index;
    logic3 value;
    bool flipped;
  };

  /// Walk an objective back to an unassigned input or state.
  std::optional<decision> backtrace( frame const& fr, std::uint32_t net, logic3 value ) const
  {
    for ( std::size_t guard = 0; guard <= gates_.size() + 1; ++guard )
    {
      auto const& src = sources_[net];
      switch ( src.kind )
      {
      case source::type::pi:
        return decision{ false, src.index, value, false };
      case source::type::state_q:
        return decision{ true, src.index, value, false };
      case source::type::state_qb:
        return decision{ true, src.index, ~value, false };
      case source::type::gate:
      {
        auto const& g = gates_[src.index];
        bool inverting = g.kind == cell_kind::inv || g.kind == cell_kind::nand2 || g.kind == cell_kind::nor2;
        logic3 const want = inverting ? ~value : value;
        std::optional<std::size_t> pick;
        for ( std::size_t p = 0; p < input_count( g.kind ); ++p )
          if ( g.in[p] != none && unresolved( fr, g.in[p] ) )
          {
            pick = p;
            break;
          }
        if ( !pick )
          return std::nullopt;
        net = g.in[*pick];
        value = ( g.kind == cell_kind::andb2 && *pick == 1 ) ? ~want : want;
        break;
      }
      default:
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  podem_result search( fault const& f, podem_options const& options ) const
  {
    auto const inj = locate( f );
    std::vector<logic3> pi( pis_.size(), logic3::x );
    std::vector<logic3> st( states_.size(), logic3::x );
    std::vector<decision> stack;
    podem_result result;
    frame fr;

    auto assign = [&]( decision const& d ) { ( d.is_state ? st : pi )[d.index] = d.value; };
    auto unassign = [&]( decision const& d ) { ( d.is_state ? st : pi )[d.index] = logic3::x; };

    while ( true )
    {
      simulate( fr, pi, st, inj );
      if ( detected( fr, inj ) )
      {
        result.status = podem_status::detected;
        result.pattern = to_pattern( pi, st );
        return result;
      }
      std::optional<decision> next;
      if ( auto obj = objective( fr, st, inj ) )
        next = backtrace( fr, obj->first, obj->second );
      if ( next )
      {
        stack.push_back( *next );
        assign( *next );
        continue;
      }
      // Backtrack: undo flipped decisions, flip the most recent open one.
      while ( !stack.empty() && stack.back().flipped )
      {
        unassign( stack.back() );
        stack.pop_back();
      }
      if ( stack.empty() )
      {
        result.status = podem_status::untestable;
        return result;
      }
      if ( result.backtracks >= options.backtrack_limit )
      {
        result.status = podem_status::aborted;
        return result;
      }
      ++result.backtracks;
      stack.back().value = ~stack.back().value;
      stack.back().flipped = true;
      assign( stack.back() );
    }
  }

  scan_pattern to_pattern( std::vector<logic3> const& pi, std::vector<logic3> const& st ) const
  {
    scan_pattern p;
    for ( auto const& c : chains_.chains )
      p.load.emplace_back( c.cells.size(), 'X' );
    for ( std::size_t i = 0; i < states_.size(); ++i )
      p.load[states_[i].chain][states_[i].position] = to_char( st[i] );
    for ( auto v : pi )
      p.pi += to_char( v );
    return p;
  }

  netlist const* nl_;
  chain_map chains_;
  std::vector<std::uint32_t> pis_;
  std::vector<std::pair<std::uint32_t, bool>> constants_;
  std::vector<state_var> states_;
  std::vector<std::string> d_cells_;
  std::vector<std::uint32_t> d_pins_;
  std::vector<std::uint32_t> pos_;
  std::vector<gate> gates_;
  std::vector<std::pair<std::string, std::size_t>> gate_index_;
  std::vector<source> sources_;
};

inline podem_result podem( netlist const& nl, chain_map const& chains, fault const& f, podem_options const& options = {} )
{
  return podem_engine( nl, chains ).run( f, options );
}

} // namespace scanpower
