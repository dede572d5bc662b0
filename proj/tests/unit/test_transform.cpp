#include <gtest/gtest.h>

#include "support/cosim.hpp"
#include "support/random_netlist.hpp"

using namespace scanpower;
using namespace scanpower::testing;

namespace
{

std::string pin_net( netlist const& nl, std::string const& cell, std::string const& port )
{
  auto const& c = nl.get( nl.cell_named( cell ) );
  return nl.get( c.pins[*port_index( c.kind, port )] ).name;
}

std::vector<std::string> scan_cells( netlist const& nl )
{
  std::vector<std::string> out;
  for ( auto id : flip_flops( nl ) )
    if ( nl.get( id ).kind == cell_kind::sff )
      out.push_back( nl.get( id ).name );
  return out;
}

} // namespace

TEST( Freeze, S27ValueZero )
{
  auto const nl = s27_scan();
  auto const r = insert_freeze( nl, "reg_d_out_1_", false );
  EXPECT_EQ( r.log.gate_kind, cell_kind::andb2 );
  EXPECT_EQ( r.log.net, "reg_d_out_1__frz" );
  EXPECT_EQ( r.log.rewired, std::vector<std::string>{ "ix155.A0" } );
  EXPECT_TRUE( r.log.warnings.empty() );
  EXPECT_EQ( pin_net( r.design, "ix155", "A0" ), r.log.net );
  EXPECT_EQ( pin_net( r.design, r.log.gate, "A0" ), "G6" );
  EXPECT_EQ( pin_net( r.design, r.log.gate, "A1N" ), "scan_en" );
  EXPECT_EQ( pin_net( r.design, r.log.gate, "Y" ), r.log.net );
  // The scan path still reads the flip-flop directly.
  EXPECT_EQ( pin_net( r.design, "reg_d_out_0_", "SI" ), pin_net( nl, "reg_d_out_0_", "SI" ) );
  EXPECT_TRUE( validate( r.design ).empty() );
  EXPECT_EQ( trace_chains( r.design ), trace_chains( nl ) );
  EXPECT_EQ( nl.cells().size() + 1, r.design.cells().size() );
}

TEST( Freeze, ValueOneUsesOrAndMovesOutputs )
{
  auto nl = parse_bench( "INPUT(a)\nOUTPUT(q)\nOUTPUT(y)\nq = DFF(y)\ny = NAND(a, q)\n" );
  auto const [design, chains] = insert_scan( nl, scan_config{} );
  auto const cell = chains.chains[0].cells[0];
  auto const r = insert_freeze( design, cell, true );
  EXPECT_EQ( r.log.gate_kind, cell_kind::or2 );
  auto const& rw = r.log.rewired;
  EXPECT_NE( std::find( rw.begin(), rw.end(), "PO q" ), rw.end() );
  bool po_moved = false;
  for ( auto const& o : r.design.outputs() )
    if ( o.name == "q" )
      po_moved = r.design.get( o.net ).name == r.log.net;
  EXPECT_TRUE( po_moved );
  // Scan-out still taps the cell.
  for ( auto const& o : r.design.outputs() )
    if ( is_scan_output_name( o.name ) )
    {
      EXPECT_NE( r.design.get( o.net ).name, r.log.net );
    }
}

TEST( Freeze, Errors )
{
  auto const nl = s27_scan();
  EXPECT_THROW( insert_freeze( nl, "ix155", false ), netlist_error );
  EXPECT_THROW( insert_freeze( nl, "nope", false ), netlist_error );
  auto const once = insert_freeze( nl, "reg_d_out_1_", false );
  EXPECT_THROW( insert_freeze( once.design, "reg_d_out_1_", true ), netlist_error );
  EXPECT_THROW( insert_freeze( s27_bench(), "reg_G6", false ), netlist_error );
}

TEST( Freeze, Warnings )
{
  auto const nl = parse_vlog( "module m (a, y, z, scan_in1, scan_en, scan_out1, CLK);\n"
                              "input a, scan_in1, scan_en, CLK;\noutput y, z, scan_out1;\nwire q, qb;\n"
                              "sff r (.D(a), .SI(scan_in1), .SE(scan_en), .CLK(CLK), .Q(q), .QB(qb));\n"
                              "inv02 i (.A(qb), .Y(y));\nassign z = a;\nassign scan_out1 = q;\nendmodule\n" );
  auto const r = insert_freeze( nl, "r", false );
  ASSERT_EQ( r.log.warnings.size(), 2u );
  EXPECT_NE( r.log.warnings[0].find( "no functional readers" ), std::string::npos );
  EXPECT_NE( r.log.warnings[1].find( "QB" ), std::string::npos );
}

// During shift the frozen net holds the freeze value.
TEST( Freeze, ConstantDuringShift )
{
  std::mt19937_64 rng( 21 );
  for ( int t = 0; t < 20; ++t )
  {
    auto const d = t == 0 ? scan_design{ s27().design, s27().chains } : random_scan_design( rng, { 3, 4, 15, 2, t % 2 == 0 } );
    auto const cells = scan_cells( d.design );
    auto const cell = cells[rng() % cells.size()];
    bool const value = rng() % 2;
    auto const r = insert_freeze( d.design, cell, value );
    simulator const sim( r.design, d.chains );
    std::vector<trace_frame> trace;
    run_patterns( sim, random_patterns( rng, r.design, d.chains, 5 ), &trace );
    std::size_t w = 0;
    while ( sim.watched_name( w ) != r.log.net )
      ++w;
    // Frame 0 is the power-up state.
    for ( std::size_t i = 1; i < trace.size(); ++i )
      if ( trace[i].bucket == toggle_bucket::shift )
      {
        EXPECT_EQ( trace[i].watched[w], to_logic( value ) );
      }
  }
}

TEST( Freeze, TransparentInFunctionalMode )
{
  std::mt19937_64 rng( 4 );
  for ( int t = 0; t < 20; ++t )
  {
    auto const d = t == 0 ? scan_design{ s27().design, s27().chains } : random_scan_design( rng, { 3, 5, 18, 3, t % 2 == 1 } );
    auto frozen = d.design;
    for ( auto const& cell : scan_cells( d.design ) )
      if ( rng() % 2 )
        frozen = insert_freeze( frozen, cell, rng() % 2 ).design;
    EXPECT_EQ( cosimulate( d.design, frozen, 1000, rng ), 0u ) << t;
  }
}

TEST( Area, StandardModel )
{
  EXPECT_DOUBLE_EQ( area( s27_bench() ), 22.5 );
  EXPECT_DOUBLE_EQ( area( s27_scan() ), 28.5 );
  EXPECT_DOUBLE_EQ( area( insert_freeze( s27_scan(), "reg_d_out_1_", false ).design ), 30.0 );
}

TEST( Area, CustomWeights )
{
  auto m = area_model::standard();
  m.set( cell_kind::sff, 10 );
  EXPECT_DOUBLE_EQ( area( s27_scan(), m ), 40.5 );
  EXPECT_THROW( m.set( cell_kind::inv, 0 ), std::invalid_argument );
  area_model empty;
  EXPECT_THROW( area( s27_scan(), empty ), std::invalid_argument );
}
