#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/netlist.hpp"
#include "scanpower/scan.hpp"

namespace scanpower
{

struct transform_log
{
  std::string cell;
  bool value = false;
  std::string gate;
  cell_kind gate_kind = cell_kind::andb2;
  std::string net;
  /// Reader pins moved to the frozen net, as "cell.PORT" or "PO name".
  std::vector<std::string> rewired;
  std::vector<std::string> warnings;
};

struct freeze_result
{
  netlist design;
  transform_log log;
};

inline std::string freeze_gate_name( std::string const& cell ) { return cell + "_frzgate"; }

/// Put a freeze gate between a scan cell's Q and its functional readers.
/// Value 0 uses ANDB2(Q, scan_en); value 1 uses OR2(Q, scan_en). SI pins
/// and scan-out ports keep reading Q.
inline freeze_result insert_freeze( netlist const& original, std::string const& cell_name, bool value )
{
  auto const id = original.cell_named( cell_name );
  auto const& c = original.get( id );
  if ( c.kind != cell_kind::sff )
    throw netlist_error( "insert_freeze: '" + cell_name + "' is not a scan flip-flop" );
  auto const se = original.scan_enable();
  if ( !se )
    throw netlist_error( "insert_freeze: netlist has no scan enable" );
  if ( original.find_cell( freeze_gate_name( cell_name ) ) )
    throw netlist_error( "insert_freeze: '" + cell_name + "' is already frozen" );

  freeze_result out{ original, {} };
  netlist& nl = out.design;
  auto& log = out.log;
  log.cell = cell_name;
  log.value = value;
  log.gate = freeze_gate_name( cell_name );
  log.gate_kind = value ? cell_kind::or2 : cell_kind::andb2;

  auto const sff = flip_flop_ports( cell_kind::sff );
  net_id q = c.pins[sff.q];
  if ( !q.valid() )
  {
    q = nl.add_net( nl.fresh_net_name( cell_name + "_q" ) );
    nl.connect( id, sff.q, q );
  }

  connectivity const conn( original );
  auto const frozen = nl.add_net( nl.fresh_net_name( cell_name + "_frz" ) );
  log.net = nl.get( frozen ).name;
  if ( c.pins[sff.q].valid() )
  {
    for ( auto r : conn.readers( q ) )
    {
      auto const& reader = original.get( r.cell );
      if ( reader.kind == cell_kind::sff && r.port != sff.d )
        continue;
      if ( reader.kind == cell_kind::dff && r.port != flip_flop_ports( cell_kind::dff ).d )
        continue;
      nl.connect( r.cell, r.port, frozen );
      log.rewired.push_back( reader.name + "." + std::string( port_names( reader.kind )[r.port] ) );
    }
    for ( auto i : conn.output_readers( q ) )
    {
      if ( is_scan_output_name( original.outputs()[i].name ) )
        continue;
      nl.rebind_output( i, frozen );
      log.rewired.push_back( "PO " + original.outputs()[i].name );
    }
  }
  nl.add_cell( log.gate, log.gate_kind, { q, *se, frozen } );

  if ( log.rewired.empty() )
    log.warnings.push_back( "Q of '" + cell_name + "' has no functional readers; the freeze gate drives nothing" );
  auto const qb = c.pins[sff.qb];
  if ( qb.valid() )
  {
    bool functional_qb = false;
    for ( auto r : conn.readers( qb ) )
    {
      auto const& reader = original.get( r.cell );
      if ( !is_sequential( reader.kind ) || r.port == flip_flop_ports( reader.kind ).d )
        functional_qb = true;
    }
    for ( auto i : conn.output_readers( qb ) )
      if ( !is_scan_output_name( original.outputs()[i].name ) )
        functional_qb = true;
    if ( functional_qb )
      log.warnings.push_back( "QB of '" + cell_name + "' has functional readers that are not frozen" );
  }
  return out;
}

/// Gate-equivalent weight per cell kind.
struct area_model
{
  std::array<std::optional<double>, all_cell_kinds.size()> weight{};

  static area_model standard()
  {
    area_model m;
    m.set( cell_kind::inv, 0.5 );
    m.set( cell_kind::buf, 0.5 );
    m.set( cell_kind::and2, 1.5 );
    m.set( cell_kind::or2, 1.5 );
    m.set( cell_kind::andb2, 1.5 );
    m.set( cell_kind::nand2, 1.0 );
    m.set( cell_kind::nor2, 1.0 );
    m.set( cell_kind::dff, 4.0 );
    m.set( cell_kind::sff, 6.0 );
    return m;
  }

  void set( cell_kind k, double w )
  {
    if ( !( w > 0 ) )
      throw std::invalid_argument( "area_model: weights must be positive" );
    weight[static_cast<std::size_t>( k )] = w;
  }

  double of( cell_kind k ) const
  {
    auto const w = weight[static_cast<std::size_t>( k )];
    if ( !w )
      throw std::invalid_argument( "area_model: no weight for " + std::string( library_name( k ) ) );
    return *w;
  }
};

inline double area( netlist const& nl, area_model const& model = area_model::standard() )
{
  double total = 0;
  for ( auto const& c : nl.cells() )
    total += model.of( c.kind );
  return total;
}

} // namespace scanpower
