#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/errors.hpp"
#include "scanpower/fault_model.hpp"
#include "scanpower/logic.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/scan.hpp"

namespace scanpower
{

/// One scan test. Chain strings use Q-state semantics: character i is the
/// value held by the i-th cell counted from the scan-in side. Empty
/// expected strings mean "nothing expected" (all X).
struct scan_pattern
{
  std::vector<std::string> load;
  std::string pi;
  std::string expected_po;
  std::vector<std::string> expected_unload;

  bool operator==( scan_pattern const& ) const = default;
};

/// Hold a scan cell's functional fanout at `value` while scan enable is 1,
/// without rewriting the netlist. Mirrors the freeze gate of transform.hpp.
struct freeze_override
{
  std::string cell;
  bool value = false;
};

struct sim_options
{
  std::optional<fault> injected;
  std::vector<freeze_override> freezes;
};

struct toggle_counts
{
  std::uint64_t shift = 0;
  std::uint64_t capture = 0;

  toggle_counts& operator+=( toggle_counts const& o )
  {
    shift += o.shift;
    capture += o.capture;
    return *this;
  }

  bool operator==( toggle_counts const& ) const = default;
};

/// Per-net transition counts on combinational outputs, sorted by net name.
struct toggle_stats
{
  std::vector<std::pair<std::string, toggle_counts>> nets;

  toggle_counts total() const
  {
    toggle_counts t;
    for ( auto const& [name, c] : nets )
      t += c;
    return t;
  }

  toggle_counts at( std::string_view name ) const
  {
    for ( auto const& [n, c] : nets )
      if ( n == name )
        return c;
    throw std::out_of_range( "no toggle counter for net '" + std::string( name ) + "'" );
  }

  bool operator==( toggle_stats const& ) const = default;
};

enum class toggle_bucket : std::uint8_t
{
  shift,
  capture
};

/// Watched values after one clocked step, for offline recomputation.
struct trace_frame
{
  toggle_bucket bucket;
  std::vector<logic3> watched;
};

struct sim_state
{
  std::vector<logic3> values; // per slot: nets first, then freeze slots
  std::vector<logic3> ffs;    // per flip-flop, in simulator order
};

/// A netlist compiled for cycle-based, zero-delay, three-valued simulation.
/// Toggles are tracked on combinational output nets (and freeze slots).
class simulator
{
public:
  static constexpr std::uint32_t no_slot = std::numeric_limits<std::uint32_t>::max();

  explicit simulator( netlist const& nl, sim_options options = {} ) : simulator( nl, chain_map{}, std::move( options ) ) {}

  simulator( netlist const& nl, chain_map chains, sim_options options = {} )
      : nl_( &nl ), chains_( std::move( chains ) ), options_( std::move( options ) )
  {
    compile();
  }

  netlist const& design() const noexcept { return *nl_; }
  chain_map const& chains() const noexcept { return chains_; }
  std::size_t num_watched() const noexcept { return watched_.size(); }
  std::string const& watched_name( std::size_t i ) const { return watched_names_.at( i ); }
  std::size_t num_functional_inputs() const noexcept { return pi_slots_.size(); }
  std::size_t num_functional_outputs() const noexcept { return po_slots_.size(); }
  std::size_t num_flip_flops() const noexcept { return ffs_.size(); }

  /// All flip-flops and inputs X, settled.
  sim_state reset() const
  {
    sim_state s;
    s.values.assign( num_slots_, logic3::x );
    s.ffs.assign( ffs_.size(), logic3::x );
    settle( s );
    return s;
  }

  /// Evaluate all combinational logic once in level order.
  void settle( sim_state& s ) const
  {
    auto set = [&]( std::uint32_t slot, logic3 v ) { s.values[slot] = slot == stem_slot_ ? stem_value_ : v; };
    for ( auto slot : input_slots_ )
      set( slot, s.values[slot] );
    for ( auto const& [slot, v] : constants_ )
      set( slot, to_logic( v ) );
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
    {
      auto const& ff = ffs_[i];
      if ( ff.q != no_slot )
        set( ff.q, s.ffs[i] );
      if ( ff.qb != no_slot )
        set( ff.qb, ~s.ffs[i] );
    }
    for ( auto const& f : freeze_slots_ )
    {
      auto const se = s.values[f.se];
      auto const q = s.values[f.q];
      auto const frozen = to_logic( f.value );
      s.values[f.slot] = se == logic3::one ? frozen : se == logic3::zero ? q : ( q == frozen ? frozen : logic3::x );
    }
    for ( std::size_t i = 0; i < gates_.size(); ++i )
    {
      auto const& g = gates_[i];
      auto a = g.in0 == no_slot ? logic3::x : s.values[g.in0];
      auto b = g.in1 == no_slot ? logic3::x : s.values[g.in1];
      if ( i == branch_gate_ )
        ( branch_pin_ == 0 ? a : b ) = branch_value_;
      set( g.out, eval_comb( g.kind, a, b ) );
    }
  }

  struct shift_outcome
  {
    std::vector<logic3> scan_out; // per chain, sampled before the clock edge
    std::vector<std::uint32_t> toggled;
  };

  /// One shift clock: scan enable high, `serial_in[k]` on chain k's scan
  /// input, every scan cell loads SI.
  shift_outcome shift_cycle( sim_state& s, std::span<const logic3> serial_in ) const
  {
    require_scan();
    if ( serial_in.size() != chain_slots_.size() )
      throw pattern_error( "shift_cycle: expected one serial bit per chain" );
    auto const before = watched_values( s );
    shift_outcome out;
    for ( auto const& c : chain_slots_ )
      out.scan_out.push_back( s.values[c.scan_out] );
    s.values[se_slot_] = logic3::one;
    for ( std::size_t k = 0; k < chain_slots_.size(); ++k )
      s.values[chain_slots_[k].scan_in] = serial_in[k];
    settle( s );
    clock( s );
    out.toggled = diff( before, s );
    return out;
  }

  /// Drive the functional inputs with scan enable low and settle.
  std::vector<std::uint32_t> apply_inputs( sim_state& s, std::span<const logic3> pi ) const
  {
    if ( pi.size() != pi_slots_.size() )
      throw pattern_error( "apply_inputs: expected " + std::to_string( pi_slots_.size() ) + " input values, got " +
                           std::to_string( pi.size() ) );
    auto const before = watched_values( s );
    if ( se_slot_ != no_slot )
      s.values[se_slot_] = logic3::zero;
    for ( std::size_t i = 0; i < pi.size(); ++i )
      s.values[pi_slots_[i]] = pi[i];
    settle( s );
    return diff( before, s );
  }

  /// One functional clock (scan enable as currently driven).
  std::vector<std::uint32_t> capture( sim_state& s ) const
  {
    auto const before = watched_values( s );
    clock( s );
    return diff( before, s );
  }

  std::vector<logic3> observe_outputs( sim_state const& s ) const
  {
    std::vector<logic3> out;
    for ( auto slot : po_slots_ )
      out.push_back( slot == no_slot ? logic3::x : s.values[slot] );
    return out;
  }

  logic3 value( sim_state const& s, net_id n ) const { return s.values.at( n.get() ); }

  std::vector<logic3> watched_values( sim_state const& s ) const
  {
    std::vector<logic3> v;
    v.reserve( watched_.size() );
    for ( auto slot : watched_ )
      v.push_back( s.values[slot] );
    return v;
  }

  /// Flip-flop index of a named cell.
  std::size_t flip_flop_index( std::string_view cell ) const
  {
    auto id = nl_->cell_named( cell );
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
      if ( ffs_[i].cell == id )
        return i;
    throw netlist_error( "'" + std::string( cell ) + "' is not a flip-flop" );
  }

  /// Chain cell positions as flip-flop indices, per chain.
  std::vector<std::size_t> const& chain_cells( std::size_t chain ) const { return chain_slots_.at( chain ).cells; }

private:
  struct gate
  {
    cell_kind kind;
    std::uint32_t in0 = no_slot;
    std::uint32_t in1 = no_slot;
    std::uint32_t out = no_slot;
  };

  struct flip_flop
  {
    cell_id cell;
    cell_kind kind;
    std::uint32_t d = no_slot, si = no_slot, se = no_slot, q = no_slot, qb = no_slot;
    int branch_port = -1; // injected input-pin fault on this cell
    logic3 branch_value = logic3::x;
  };

  struct freeze_slot
  {
    std::uint32_t slot, q, se;
    bool value;
  };

  struct chain_slots
  {
    std::uint32_t scan_in = no_slot;
    std::uint32_t scan_out = no_slot;
    std::vector<std::size_t> cells;
  };

  static std::uint32_t slot_of( net_id n ) { return n.valid() ? n.value : no_slot; }

  void require_scan() const
  {
    if ( chain_slots_.empty() || se_slot_ == no_slot )
      throw netlist_error( "simulator: netlist has no scan chains" );
  }

  void clock( sim_state& s ) const
  {
    auto read = [&]( flip_flop const& ff, std::uint32_t slot, int port ) {
      if ( ff.branch_port == port )
        return ff.branch_value;
      return slot == no_slot ? logic3::x : s.values[slot];
    };
    std::vector<logic3> next( ffs_.size() );
    for ( std::size_t i = 0; i < ffs_.size(); ++i )
    {
      auto const& ff = ffs_[i];
      auto const ports = flip_flop_ports( ff.kind );
      auto const d = read( ff, ff.d, static_cast<int>( ports.d ) );
      if ( ff.kind == cell_kind::sff )
        next[i] = scan_mux( read( ff, ff.se, static_cast<int>( *ports.se ) ),
                            read( ff, ff.si, static_cast<int>( *ports.si ) ), d );
      else
        next[i] = d;
    }
    s.ffs = std::move( next );
    settle( s );
  }

  std::vector<std::uint32_t> diff( std::vector<logic3> const& before, sim_state const& s ) const
  {
    std::vector<std::uint32_t> toggled;
    for ( std::size_t w = 0; w < watched_.size(); ++w )
    {
      auto const now = s.values[watched_[w]];
      if ( is_definite( now ) && is_definite( before[w] ) && now != before[w] )
        toggled.push_back( static_cast<std::uint32_t>( w ) );
    }
    return toggled;
  }

  void compile()
  {
    netlist const& nl = *nl_;
    num_slots_ = static_cast<std::uint32_t>( nl.num_nets() );
    connectivity const conn( nl );

    for ( auto n : nl.inputs() )
      input_slots_.push_back( n.value );
    for ( std::size_t i = 0; i < nl.num_nets(); ++i )
      if ( auto c = nl.get( net_id{ i } ).constant )
        constants_.emplace_back( static_cast<std::uint32_t>( i ), *c );
    se_slot_ = nl.scan_enable() ? nl.scan_enable()->value : no_slot;

    for ( auto n : functional_inputs( nl ) )
      pi_slots_.push_back( n.value );
    for ( auto i : functional_outputs( nl ) )
      po_slots_.push_back( slot_of( nl.outputs()[i].net ) );

    for ( auto id : flip_flops( nl ) )
    {
      auto const& c = nl.get( id );
      auto const ports = flip_flop_ports( c.kind );
      flip_flop ff{ id, c.kind };
      ff.d = slot_of( c.pins[ports.d] );
      ff.q = slot_of( c.pins[ports.q] );
      ff.qb = slot_of( c.pins[ports.qb] );
      if ( ports.si )
      {
        ff.si = slot_of( c.pins[*ports.si] );
        ff.se = slot_of( c.pins[*ports.se] );
      }
      ffs_.push_back( ff );
    }

    std::vector<std::uint32_t> gate_of_cell( nl.num_cells(), no_slot );
    for ( auto id : evaluation_order( nl ) )
    {
      auto const& c = nl.get( id );
      gate g{ c.kind };
      g.in0 = slot_of( c.pins[0] );
      if ( input_count( c.kind ) == 2 )
        g.in1 = slot_of( c.pins[1] );
      g.out = slot_of( c.pins[input_count( c.kind )] );
      gate_of_cell[id.get()] = static_cast<std::uint32_t>( gates_.size() );
      gates_.push_back( g );
    }

    // Combinational outputs are the watched nets; a dangling output pin
    // still gets a private slot so evaluation has somewhere to write.
    std::vector<std::pair<std::string, std::uint32_t>> watch;
    for ( auto& g : gates_ )
    {
      if ( g.out == no_slot )
        g.out = num_slots_++;
      else
        watch.emplace_back( nl.get( net_id{ g.out } ).name, g.out );
    }

    for ( auto const& fr : options_.freezes )
    {
      auto id = nl.cell_named( fr.cell );
      auto const& c = nl.get( id );
      if ( c.kind != cell_kind::sff )
        throw netlist_error( "freeze override: '" + fr.cell + "' is not a scan cell" );
      auto const ports = flip_flop_ports( c.kind );
      auto const q = c.pins[ports.q];
      if ( !q.valid() )
        continue;
      if ( se_slot_ == no_slot )
        throw netlist_error( "freeze override: netlist has no scan enable" );
      freeze_slot f{ num_slots_++, q.value, se_slot_, fr.value };
      for ( auto r : conn.readers( q ) )
      {
        auto const& reader = nl.get( r.cell );
        if ( reader.kind == cell_kind::sff && r.port == *flip_flop_ports( cell_kind::sff ).si )
          continue;
        if ( is_sequential( reader.kind ) )
        {
          for ( auto& ff : ffs_ )
            if ( ff.cell == r.cell && r.port == flip_flop_ports( reader.kind ).d )
              ff.d = f.slot;
          continue;
        }
        auto& g = gates_[gate_of_cell[r.cell.get()]];
        ( r.port == 0 ? g.in0 : g.in1 ) = f.slot;
      }
      for ( std::size_t k = 0; k < po_slots_.size(); ++k )
        if ( po_slots_[k] == q.value )
          po_slots_[k] = f.slot;
      watch.emplace_back( fr.cell + "_frz", f.slot );
      freeze_slots_.push_back( f );
    }

    std::sort( watch.begin(), watch.end() );
    watch.erase( std::unique( watch.begin(), watch.end() ), watch.end() );
    for ( auto const& [name, slot] : watch )
    {
      watched_names_.push_back( name );
      watched_.push_back( slot );
    }

    if ( options_.injected )
      compile_fault( *options_.injected, gate_of_cell );

    for ( auto const& chain : chains_.chains )
    {
      chain_slots cs;
      auto in = nl.find_net( chain.scan_in );
      auto out = nl.find_output( chain.scan_out );
      if ( !in || !out )
        throw netlist_error( "simulator: scan ports of " + chain.name + " not found" );
      cs.scan_in = in->value;
      cs.scan_out = slot_of( nl.outputs()[*out].net );
      for ( auto const& name : chain.cells )
      {
        auto id = nl.cell_named( name );
        auto it = std::find_if( ffs_.begin(), ffs_.end(), [&]( auto const& f ) { return f.cell == id; } );
        if ( it == ffs_.end() || it->kind != cell_kind::sff )
          throw netlist_error( "simulator: chain cell '" + name + "' is not a scan flip-flop" );
        cs.cells.push_back( static_cast<std::size_t>( it - ffs_.begin() ) );
      }
      chain_slots_.push_back( std::move( cs ) );
    }
  }

  void compile_fault( fault const& f, std::vector<std::uint32_t> const& gate_of_cell )
  {
    netlist const& nl = *nl_;
    auto const v = to_logic( stuck_value( f.polarity ) );
    if ( f.site.is_primary_input() )
    {
      auto n = nl.find_net( f.site.port );
      if ( !n || !nl.is_input( *n ) )
        throw netlist_error( "fault site: no primary input '" + f.site.port + "'" );
      stem_slot_ = n->value;
      stem_value_ = v;
      return;
    }
    auto id = nl.cell_named( f.site.cell );
    auto const& c = nl.get( id );
    auto port = port_index( c.kind, f.site.port );
    if ( !port )
      throw netlist_error( "fault site: cell '" + c.name + "' has no port '" + f.site.port + "'" );
    if ( is_output_port( c.kind, *port ) )
    {
      stem_slot_ = slot_of( c.pins[*port] );
      stem_value_ = v;
    }
    else if ( is_sequential( c.kind ) )
    {
      for ( auto& ff : ffs_ )
        if ( ff.cell == id )
        {
          ff.branch_port = static_cast<int>( *port );
          ff.branch_value = v;
        }
    }
    else
    {
      branch_gate_ = gate_of_cell[id.get()];
      branch_pin_ = static_cast<int>( *port );
      branch_value_ = v;
    }
  }

  netlist const* nl_;
  chain_map chains_;
  sim_options options_;

  std::uint32_t num_slots_ = 0;
  std::vector<std::uint32_t> input_slots_;
  std::vector<std::pair<std::uint32_t, bool>> constants_;
  std::uint32_t se_slot_ = no_slot;
  std::vector<std::uint32_t> pi_slots_;
  std::vector<std::uint32_t> po_slots_;
  std::vector<gate> gates_;
  std::vector<flip_flop> ffs_;
  std::vector<freeze_slot> freeze_slots_;
  std::vector<std::uint32_t> watched_;
  std::vector<std::string> watched_names_;
  std::vector<chain_slots> chain_slots_;

  std::uint32_t stem_slot_ = no_slot;
  logic3 stem_value_ = logic3::x;
  std::size_t branch_gate_ = std::numeric_limits<std::size_t>::max();
  int branch_pin_ = 0;
  logic3 branch_value_ = logic3::x;
};

/// Conversion between Q-state chain strings and the bits seen at the chain
/// pins. With QB stitching every stage inverts: the bit shifted in for
/// position i is inverted i times on its way there, and the value read out
/// for position i is inverted len-i times. Each direction is an involution.
inline std::string compensate_load( std::string_view bits, stitch_mode stitch )
{
  std::string out( bits );
  if ( stitch == stitch_mode::qb )
    for ( std::size_t i = 0; i < out.size(); ++i )
      out[i] = to_char( flip_if( logic_from_char( out[i] ), i % 2 == 1 ) );
  return out;
}

inline std::string compensate_unload( std::string_view bits, stitch_mode stitch )
{
  std::string out( bits );
  if ( stitch == stitch_mode::qb )
    for ( std::size_t i = 0; i < out.size(); ++i )
      out[i] = to_char( flip_if( logic_from_char( out[i] ), ( out.size() - i ) % 2 == 1 ) );
  return out;
}

/// Stateful driver of the scan protocol over one simulator. Accumulates
/// toggles into shift/capture buckets and optionally records a trace.
class scan_session
{
public:
  explicit scan_session( simulator const& sim ) : sim_( &sim ), state_( sim.reset() ), counts_( sim.num_watched() )
  {
  }

  sim_state const& state() const noexcept { return state_; }
  sim_state& state() noexcept { return state_; }
  simulator const& sim() const noexcept { return *sim_; }

  void record_trace( std::vector<trace_frame>* trace )
  {
    trace_ = trace;
    if ( trace_ )
      trace_->push_back( { toggle_bucket::shift, sim_->watched_values( state_ ) } );
  }

  /// Shift `loads` (Q-state, one string per chain) in over max-length
  /// clocks; returns the previous chain contents in Q-state form. Shorter
  /// chains are padded with zeros ahead of their data.
  std::vector<std::string> load( std::vector<std::string> const& loads )
  {
    auto const& chains = sim_->chains().chains;
    if ( loads.size() != chains.size() )
      throw pattern_error( "load: expected " + std::to_string( chains.size() ) + " chain strings" );
    for ( std::size_t k = 0; k < chains.size(); ++k )
      if ( loads[k].size() != chains[k].cells.size() )
        throw pattern_error( "load: chain " + chains[k].name + " needs " + std::to_string( chains[k].cells.size() ) +
                             " bits, got " + std::to_string( loads[k].size() ) );
    auto const stitch = sim_->chains().stitch;
    std::vector<std::string> raw_in;
    for ( auto const& l : loads )
      raw_in.push_back( compensate_load( l, stitch ) );
    return shift_all( [&]( std::size_t k, std::size_t pos ) { return logic_from_char( raw_in[k][pos] ); } );
  }

  /// Shift out the chain contents with zero fill.
  std::vector<std::string> unload()
  {
    return shift_all( []( std::size_t, std::size_t ) { return logic3::zero; } );
  }

  /// Scan enable low, functional inputs applied; returns the functional
  /// outputs.
  std::string apply_inputs( std::string_view pi )
  {
    std::vector<logic3> v;
    for ( char c : pi )
      v.push_back( logic_from_char( c ) );
    account( sim_->apply_inputs( state_, v ), toggle_bucket::capture );
    std::string po;
    for ( auto x : sim_->observe_outputs( state_ ) )
      po += to_char( x );
    return po;
  }

  void capture() { account( sim_->capture( state_ ), toggle_bucket::capture ); }

  toggle_stats stats() const
  {
    toggle_stats t;
    for ( std::size_t w = 0; w < counts_.size(); ++w )
      t.nets.emplace_back( sim_->watched_name( w ), counts_[w] );
    return t;
  }

  std::uint64_t shift_cycles() const noexcept { return shift_cycles_; }

private:
  template<class Bit>
  std::vector<std::string> shift_all( Bit&& raw_bit )
  {
    auto const& chains = sim_->chains().chains;
    auto const stitch = sim_->chains().stitch;
    std::size_t const L = sim_->chains().max_length();
    std::vector<std::string> raw_out( chains.size() );
    for ( std::size_t t = 0; t < L; ++t )
    {
      std::vector<logic3> serial( chains.size(), logic3::zero );
      for ( std::size_t k = 0; k < chains.size(); ++k )
      {
        std::size_t const len = chains[k].cells.size();
        std::size_t const pos = L - 1 - t;
        if ( pos < len )
          serial[k] = raw_bit( k, pos );
      }
      auto outcome = sim_->shift_cycle( state_, serial );
      ++shift_cycles_;
      account( outcome.toggled, toggle_bucket::shift );
      for ( std::size_t k = 0; k < chains.size(); ++k )
        if ( t < chains[k].cells.size() )
          raw_out[k] += to_char( outcome.scan_out[k] );
    }
    // raw_out[k][t] came from position len-1-t; reorder to position order.
    std::vector<std::string> unloaded;
    for ( auto& r : raw_out )
    {
      std::reverse( r.begin(), r.end() );
      unloaded.push_back( compensate_unload( r, stitch ) );
    }
    return unloaded;
  }

  void account( std::vector<std::uint32_t> const& toggled, toggle_bucket bucket )
  {
    for ( auto w : toggled )
      ( bucket == toggle_bucket::shift ? counts_[w].shift : counts_[w].capture ) += 1;
    if ( trace_ )
      trace_->push_back( { bucket, sim_->watched_values( state_ ) } );
  }

  simulator const* sim_;
  sim_state state_;
  std::vector<toggle_counts> counts_;
  std::vector<trace_frame>* trace_ = nullptr;
  std::uint64_t shift_cycles_ = 0;
};

struct pattern_result
{
  std::string observed_po;
  std::vector<std::string> observed_unload;
};

struct mismatch
{
  std::size_t pattern;
  std::string where;
  char expected;
  char observed;

  bool operator==( mismatch const& ) const = default;
};

struct run_result
{
  toggle_stats toggles;
  std::vector<pattern_result> results;
  std::vector<mismatch> mismatches;
};

/// Check pattern dimensions against the simulator's ports and chains.
inline void check_pattern( simulator const& sim, scan_pattern const& p, std::size_t index )
{
  auto const& chains = sim.chains().chains;
  auto fail = [&]( std::string const& what ) {
    throw pattern_error( "pattern " + std::to_string( index ) + ": " + what );
  };
  auto check_bits = [&]( std::string const& s, std::string const& what ) {
    for ( char c : s )
      if ( c != '0' && c != '1' && c != 'X' )
        fail( what + " contains '" + std::string( 1, c ) + "'" );
  };
  if ( p.load.size() != chains.size() )
    fail( "expected " + std::to_string( chains.size() ) + " load strings" );
  for ( std::size_t k = 0; k < chains.size(); ++k )
  {
    if ( p.load[k].size() != chains[k].cells.size() )
      fail( "load of " + chains[k].name + " has wrong length" );
    check_bits( p.load[k], "load" );
  }
  if ( p.pi.size() != sim.num_functional_inputs() )
    fail( "PI vector has " + std::to_string( p.pi.size() ) + " bits, expected " +
          std::to_string( sim.num_functional_inputs() ) );
  check_bits( p.pi, "PI" );
  if ( !p.expected_po.empty() && p.expected_po.size() != sim.num_functional_outputs() )
    fail( "PO vector has wrong length" );
  check_bits( p.expected_po, "PO" );
  if ( !p.expected_unload.empty() )
  {
    if ( p.expected_unload.size() != chains.size() )
      fail( "expected " + std::to_string( chains.size() ) + " unload strings" );
    for ( std::size_t k = 0; k < chains.size(); ++k )
    {
      if ( p.expected_unload[k].size() != chains[k].cells.size() )
        fail( "unload of " + chains[k].name + " has wrong length" );
      check_bits( p.expected_unload[k], "unload" );
    }
  }
}

/// Apply one pattern: load (unloading the previous contents), drive the
/// inputs, observe outputs, then one capture clock. Returns the unloaded
/// previous contents and the observed outputs.
inline std::pair<std::vector<std::string>, std::string> run_pattern( scan_session& session, scan_pattern const& p,
                                                                     std::size_t index = 0 )
{
  check_pattern( session.sim(), p, index );
  auto previous = session.load( p.load );
  auto po = session.apply_inputs( p.pi );
  session.capture();
  return { std::move( previous ), std::move( po ) };
}

namespace detail
{
inline void compare_bits( std::vector<mismatch>& out, std::size_t pattern, std::string const& where_prefix,
                          std::string_view expected, std::string_view observed,
                          std::vector<std::string> const* labels = nullptr )
{
  for ( std::size_t i = 0; i < expected.size() && i < observed.size(); ++i )
  {
    char const e = expected[i];
    char const o = observed[i];
    if ( e == 'X' || o == 'X' || e == o )
      continue;
    std::string where = where_prefix + ( labels ? ( *labels )[i] : std::to_string( i ) );
    out.push_back( { pattern, where, e, o } );
  }
}
} // namespace detail

/// Apply a pattern set with overlapped load/unload and a final flush.
inline run_result run_patterns( simulator const& sim, std::vector<scan_pattern> const& patterns,
                                std::vector<trace_frame>* trace = nullptr )
{
  scan_session session( sim );
  session.record_trace( trace );
  run_result r;
  r.results.resize( patterns.size() );
  for ( std::size_t i = 0; i < patterns.size(); ++i )
  {
    auto [previous, po] = run_pattern( session, patterns[i], i );
    if ( i > 0 )
      r.results[i - 1].observed_unload = std::move( previous );
    r.results[i].observed_po = std::move( po );
  }
  if ( !patterns.empty() )
    r.results.back().observed_unload = session.unload();
  r.toggles = session.stats();

  auto const& nl = sim.design();
  std::vector<std::string> po_names;
  for ( auto i : functional_outputs( nl ) )
    po_names.push_back( nl.outputs()[i].name );
  auto const& chains = sim.chains().chains;
  for ( std::size_t i = 0; i < patterns.size(); ++i )
  {
    detail::compare_bits( r.mismatches, i, "PO ", patterns[i].expected_po, r.results[i].observed_po, &po_names );
    for ( std::size_t k = 0; k < patterns[i].expected_unload.size(); ++k )
      detail::compare_bits( r.mismatches, i, chains[k].name + ":", patterns[i].expected_unload[k],
                            r.results[i].observed_unload[k], &chains[k].cells );
  }
  return r;
}

inline run_result run_patterns( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> const& patterns,
                                sim_options options = {} )
{
  simulator const sim( nl, chains, std::move( options ) );
  return run_patterns( sim, patterns );
}

/// Fill expected outputs and unloads from a fault-free run.
inline std::vector<scan_pattern> with_expected_values( netlist const& nl, chain_map const& chains,
                                                       std::vector<scan_pattern> patterns )
{
  for ( auto& p : patterns )
  {
    p.expected_po.clear();
    p.expected_unload.clear();
  }
  auto const r = run_patterns( nl, chains, patterns );
  for ( std::size_t i = 0; i < patterns.size(); ++i )
  {
    patterns[i].expected_po = r.results[i].observed_po;
    patterns[i].expected_unload = r.results[i].observed_unload;
  }
  return patterns;
}

/// Tester clocks for a pattern set: overlapped load/unload of
/// `max_chain_len` shifts plus one capture per pattern, and a final flush.
constexpr std::uint64_t test_clocks( std::uint64_t n_patterns, std::uint64_t max_chain_len ) noexcept
{
  if ( n_patterns == 0 )
    return 0;
  return n_patterns * ( max_chain_len + 1 ) + max_chain_len;
}

} // namespace scanpower
