#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scanpower/cell_kind.hpp"
#include "scanpower/errors.hpp"

namespace scanpower
{

/// Typed index into one of the netlist's tables.
template<class Tag>
struct index
{
  static constexpr std::uint32_t invalid = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t value = invalid;

  constexpr index() = default;
  constexpr explicit index( std::uint32_t v ) : value( v ) {}
  constexpr explicit index( std::size_t v ) : value( static_cast<std::uint32_t>( v ) ) {}

  constexpr bool valid() const noexcept { return value != invalid; }
  constexpr std::size_t get() const noexcept { return value; }

  auto operator<=>( index const& ) const = default;
};

using net_id = index<struct net_tag>;
using cell_id = index<struct cell_tag>;

struct net
{
  std::string name;
  /// Literal driver; such a net has no cell or port driver.
  std::optional<bool> constant;
};

struct cell
{
  std::string name;
  cell_kind kind;
  /// One entry per port of `kind`; an invalid id marks an unconnected pin.
  std::vector<net_id> pins;

  net_id pin( std::string_view port ) const
  {
    auto const i = port_index( kind, port );
    return i ? pins[*i] : net_id{};
  }
};

struct output_port
{
  std::string name;
  net_id net;
};

/// Gate-level netlist: nets, primitive cells and ordered ports. Names are
/// expected to be unique; `validate` reports violations instead of the
/// builder throwing, so malformed netlists can still be inspected.
class netlist
{
public:
  netlist() = default;
  explicit netlist( std::string name ) : name_( std::move( name ) ) {}

  std::string const& name() const noexcept { return name_; }
  void set_name( std::string name ) { name_ = std::move( name ); }

  std::span<const net> nets() const noexcept { return nets_; }
  std::span<const cell> cells() const noexcept { return cells_; }
  std::span<const net_id> inputs() const noexcept { return inputs_; }
  std::span<const output_port> outputs() const noexcept { return outputs_; }

  net const& get( net_id id ) const { return nets_.at( id.get() ); }
  cell const& get( cell_id id ) const { return cells_.at( id.get() ); }
  std::size_t num_nets() const noexcept { return nets_.size(); }
  std::size_t num_cells() const noexcept { return cells_.size(); }

  std::optional<net_id> clock() const noexcept { return clock_; }
  std::optional<net_id> scan_enable() const noexcept { return scan_enable_; }
  void set_clock( std::optional<net_id> n ) { clock_ = n; }
  void set_scan_enable( std::optional<net_id> n ) { scan_enable_ = n; }

  std::optional<net_id> find_net( std::string_view name ) const
  {
    auto it = net_by_name_.find( std::string( name ) );
    return it == net_by_name_.end() ? std::nullopt : std::optional{ it->second };
  }

  std::optional<cell_id> find_cell( std::string_view name ) const
  {
    auto it = cell_by_name_.find( std::string( name ) );
    return it == cell_by_name_.end() ? std::nullopt : std::optional{ it->second };
  }

  net_id net_named( std::string_view name ) const
  {
    if ( auto id = find_net( name ) )
      return *id;
    throw netlist_error( "unknown net '" + std::string( name ) + "'" );
  }

  cell_id cell_named( std::string_view name ) const
  {
    if ( auto id = find_cell( name ) )
      return *id;
    throw netlist_error( "unknown cell '" + std::string( name ) + "'" );
  }

  net_id add_net( std::string name, std::optional<bool> constant = std::nullopt )
  {
    net_id id{ nets_.size() };
    net_by_name_.try_emplace( name, id );
    nets_.push_back( { std::move( name ), constant } );
    return id;
  }

  net_id net_or_add( std::string_view name )
  {
    if ( auto id = find_net( name ) )
      return *id;
    return add_net( std::string( name ) );
  }

  void set_constant( net_id n, std::optional<bool> value ) { nets_.at( n.get() ).constant = value; }

  cell_id add_cell( std::string name, cell_kind kind, std::vector<net_id> pins )
  {
    if ( pins.size() != port_count( kind ) )
      throw netlist_error( "cell '" + name + "' of kind " + std::string( library_name( kind ) ) + " needs " +
                           std::to_string( port_count( kind ) ) + " pin bindings" );
    cell_id id{ cells_.size() };
    cell_by_name_.try_emplace( name, id );
    cells_.push_back( { std::move( name ), kind, std::move( pins ) } );
    return id;
  }

  /// Change a cell's kind and bindings in place; the name is kept.
  void replace_cell( cell_id id, cell_kind kind, std::vector<net_id> pins )
  {
    if ( pins.size() != port_count( kind ) )
      throw netlist_error( "replace_cell: wrong pin count" );
    auto& c = cells_.at( id.get() );
    c.kind = kind;
    c.pins = std::move( pins );
  }

  void connect( cell_id c, std::size_t port, net_id n ) { cells_.at( c.get() ).pins.at( port ) = n; }

  void add_input( net_id n ) { inputs_.push_back( n ); }
  void add_output( std::string name, net_id n ) { outputs_.push_back( { std::move( name ), n } ); }
  void rebind_output( std::size_t index, net_id n ) { outputs_.at( index ).net = n; }

  bool is_input( net_id n ) const
  {
    for ( auto i : inputs_ )
      if ( i == n )
        return true;
    return false;
  }

  std::optional<std::size_t> find_output( std::string_view name ) const
  {
    for ( std::size_t i = 0; i < outputs_.size(); ++i )
      if ( outputs_[i].name == name )
        return i;
    return std::nullopt;
  }

  /// A name not yet used by any net, derived from `base`.
  std::string fresh_net_name( std::string const& base ) const
  {
    if ( !find_net( base ) )
      return base;
    for ( std::size_t i = 1;; ++i )
    {
      auto candidate = base + "_" + std::to_string( i );
      if ( !find_net( candidate ) )
        return candidate;
    }
  }

  std::string fresh_cell_name( std::string const& base ) const
  {
    if ( !find_cell( base ) )
      return base;
    for ( std::size_t i = 1;; ++i )
    {
      auto candidate = base + "_" + std::to_string( i );
      if ( !find_cell( candidate ) )
        return candidate;
    }
  }

  template<class Fn>
  void foreach_cell( Fn&& fn ) const
  {
    for ( std::size_t i = 0; i < cells_.size(); ++i )
      fn( cell_id{ i }, cells_[i] );
  }

private:
  std::string name_ = "top";
  std::vector<net> nets_;
  std::vector<cell> cells_;
  std::vector<net_id> inputs_;
  std::vector<output_port> outputs_;
  std::optional<net_id> clock_;
  std::optional<net_id> scan_enable_;
  std::unordered_map<std::string, net_id> net_by_name_;
  std::unordered_map<std::string, cell_id> cell_by_name_;
};

/// A cell pin: cell plus port index within the cell's kind.
struct pin_ref
{
  cell_id cell;
  std::uint8_t port = 0;

  auto operator<=>( pin_ref const& ) const = default;
};

/// Reverse index of a netlist: who drives and who reads every net.
class connectivity
{
public:
  explicit connectivity( netlist const& nl )
      : cell_drivers_( nl.num_nets() ), readers_( nl.num_nets() ), output_readers_( nl.num_nets() ),
        input_drivers_( nl.num_nets(), 0 )
  {
    nl.foreach_cell( [&]( cell_id id, cell const& c ) {
      for ( std::size_t p = 0; p < c.pins.size(); ++p )
      {
        auto const n = c.pins[p];
        if ( !n.valid() )
          continue;
        pin_ref const ref{ id, static_cast<std::uint8_t>( p ) };
        if ( is_output_port( c.kind, p ) )
          cell_drivers_[n.get()].push_back( ref );
        else
          readers_[n.get()].push_back( ref );
      }
    } );
    for ( auto n : nl.inputs() )
      ++input_drivers_[n.get()];
    auto const outs = nl.outputs();
    for ( std::size_t i = 0; i < outs.size(); ++i )
    {
      if ( outs[i].net.valid() )
        output_readers_[outs[i].net.get()].push_back( i );
    }
  }

  /// Cell output pins bound to `n` (more than one is a validate error).
  std::span<const pin_ref> cell_drivers( net_id n ) const { return cell_drivers_.at( n.get() ); }
  /// Cell input pins bound to `n`.
  std::span<const pin_ref> readers( net_id n ) const { return readers_.at( n.get() ); }
  /// Indices of primary outputs bound to `n`.
  std::span<const std::size_t> output_readers( net_id n ) const { return output_readers_.at( n.get() ); }
  /// How many times `n` appears in the primary input list.
  std::size_t input_driver_count( net_id n ) const { return input_drivers_.at( n.get() ); }

  std::optional<pin_ref> driver_pin( net_id n ) const
  {
    auto const& d = cell_drivers_.at( n.get() );
    return d.empty() ? std::nullopt : std::optional{ d.front() };
  }

private:
  std::vector<std::vector<pin_ref>> cell_drivers_;
  std::vector<std::vector<pin_ref>> readers_;
  std::vector<std::vector<std::size_t>> output_readers_;
  std::vector<std::size_t> input_drivers_;
};

} // namespace scanpower
