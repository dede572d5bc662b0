#include <gtest/gtest.h>

#include <set>

#include "support/random_netlist.hpp"

using namespace scanpower;
using namespace scanpower::testing;

namespace
{

std::set<std::string> path_nets( netlist const& nl, std::string const& src, std::string const& dst )
{
  std::set<std::string> out;
  for ( auto g : path_gates( nl, src, dst ) )
    out.insert( output_net_name( nl, g ) );
  return out;
}

std::string const reg0 = "reg_d_out_0_";
std::string const reg1 = "reg_d_out_1_";
std::string const reg2 = "reg_d_out_2_";

std::vector<std::string> scan_cells( netlist const& nl )
{
  std::vector<std::string> out;
  for ( auto id : flip_flops( nl ) )
    if ( nl.get( id ).kind == cell_kind::sff )
      out.push_back( nl.get( id ).name );
  return out;
}

} // namespace

TEST( PathGates, S27Pairs )
{
  auto const nl = s27_scan();
  using S = std::set<std::string>;
  EXPECT_EQ( path_nets( nl, reg1, reg0 ), ( S{ "G8", "G16", "G15", "G9", "G11", "G10" } ) );
  EXPECT_EQ( path_nets( nl, reg2, reg0 ), ( S{ "G12", "G15", "G9", "G11", "G10" } ) );
  EXPECT_EQ( path_nets( nl, reg2, reg1 ), ( S{ "G12", "G15", "G9", "G11" } ) );
  EXPECT_EQ( path_nets( nl, reg0, reg2 ), S{} );
  EXPECT_EQ( path_nets( nl, reg0, reg0 ), ( S{ "G11", "G10" } ) );
}

TEST( PathGates, LevelOrdered )
{
  auto const nl = s27_scan();
  auto const level = levelize( nl );
  auto const g = path_gates( nl, reg1, reg0 );
  for ( std::size_t i = 1; i < g.size(); ++i )
    EXPECT_LE( level[g[i - 1].get()], level[g[i].get()] );
}

TEST( PathGates, NotAFlipFlop )
{
  auto const nl = s27_scan();
  EXPECT_THROW( path_gates( nl, "ix155", reg0 ), netlist_error );
  EXPECT_THROW( path_gates( nl, "nope", reg0 ), netlist_error );
}

// Every path gate lies in the source's fanout and the sink's fanin.
TEST( PathGates, WithinConesProperty )
{
  std::mt19937_64 rng( 3 );
  for ( int t = 0; t < 30; ++t )
  {
    auto const d = random_scan_design( rng, { 3, 4, 15, 2, t % 2 == 1 } );
    for ( auto const& a : scan_cells( d.design ) )
      for ( auto const& b : scan_cells( d.design ) )
      {
        auto const& ca = d.design.get( d.design.cell_named( a ) );
        auto const& cb = d.design.get( d.design.cell_named( b ) );
        auto const out = cell_names( d.design, fanout_cone( d.design, ca.pins[flip_flop_ports( ca.kind ).q] ) );
        auto const in = cell_names( d.design, fanin_cone( d.design, cb.pins[flip_flop_ports( cb.kind ).d] ) );
        for ( auto g : path_gates( d.design, a, b ) )
        {
          auto const& name = d.design.get( g ).name;
          EXPECT_TRUE( out.count( name ) && in.count( name ) ) << name;
        }
      }
  }
}

TEST( ToggleTable, S27Rows )
{
  auto const& s = s27();
  auto const rows = toggle_table( s.design, s.chains, s.atpg.patterns );
  auto const find = [&]( std::string const& a, std::string const& b ) -> pair_toggle_row const* {
    for ( auto const& r : rows )
      if ( r.src == a && r.dst == b )
        return &r;
    return nullptr;
  };
  ASSERT_NE( find( reg1, reg0 ), nullptr );
  ASSERT_NE( find( reg2, reg1 ), nullptr );
  EXPECT_EQ( find( reg0, reg2 ), nullptr );
  EXPECT_GE( find( reg1, reg0 )->toggles, find( reg2, reg1 )->toggles );

  // Row totals are sums of per-net shift counts.
  auto const stats = run_patterns( s.design, s.chains, s.atpg.patterns ).toggles;
  for ( auto const& r : rows )
  {
    std::uint64_t sum = 0;
    for ( auto const& n : r.nets )
      for ( auto const& [name, c] : stats.nets )
        if ( name == n )
          sum += c.shift;
    EXPECT_EQ( r.toggles, sum );
  }
}

TEST( ToggleTable, NoPatternsNoToggles )
{
  auto const& s = s27();
  for ( auto const& r : toggle_table( s.design, s.chains, {} ) )
    EXPECT_EQ( r.toggles, 0u );
}

TEST( ToggleTable, NoConnectionNoRows )
{
  auto const nl = parse_vlog( "module m (a, y, scan_in1, scan_en, scan_out1, CLK);\n"
                              "input a, scan_in1, scan_en, CLK;\noutput y, scan_out1;\nwire q, qb;\n"
                              "sff r (.D(a), .SI(scan_in1), .SE(scan_en), .CLK(CLK), .Q(q), .QB(qb));\n"
                              "inv02 i (.A(a), .Y(y));\nassign scan_out1 = q;\nendmodule\n" );
  EXPECT_TRUE( toggle_table( nl, toggle_stats{} ).empty() );
}

TEST( ToggleTable, Render )
{
  std::vector<pair_toggle_row> rows{ { "a", "b", { "g1", "g2" }, { "n1", "n2" }, 12 },
                                     { "long_name", "c", { "g3" }, { "n3" }, 7 } };
  auto const text = render_toggle_table( rows );
  EXPECT_EQ( text, "Path          | Gates Involved | Toggles\n"
                   "--------------+----------------+--------\n"
                   "a - b         | n1, n2         |      12\n"
                   "long_name - c | n3             |       7\n" );
}

TEST( Sensitivity, TransformRouteEqualsForcedRoute )
{
  auto const& s = s27();
  for ( auto const& cell : { reg0, reg1, reg2 } )
    for ( bool v : { false, true } )
      EXPECT_EQ( sensitivity( s.design, s.chains, s.atpg.patterns, cell, v ),
                 sensitivity_forced( s.design, s.chains, s.atpg.patterns, cell, v ) )
          << cell << " " << v;
}

TEST( Sensitivity, RoutesAgreeOnRandomDesigns )
{
  std::mt19937_64 rng( 11 );
  for ( int t = 0; t < 20; ++t )
  {
    auto const d = random_scan_design( rng, { 3, 4, 14, 2, t % 3 == 0 } );
    auto const patterns = random_patterns( rng, d.design, d.chains, 6 );
    for ( auto const& cell : scan_cells( d.design ) )
      for ( bool v : { false, true } )
        EXPECT_EQ( sensitivity( d.design, d.chains, patterns, cell, v ),
                   sensitivity_forced( d.design, d.chains, patterns, cell, v ) );
  }
}

TEST( Sensitivity, EdgeCases )
{
  auto const& s = s27();
  EXPECT_EQ( sensitivity( s.design, s.chains, {}, reg1, false ), 0 );
  EXPECT_THROW( sensitivity( s.design, s.chains, s.atpg.patterns, "ix155", false ), netlist_error );

  // A cell read only by the scan path has nothing to save; the freeze
  // net itself may still switch when scan enable rises.
  auto const nl = parse_vlog( "module m (a, y, scan_in1, scan_en, scan_out1, CLK);\n"
                              "input a, scan_in1, scan_en, CLK;\noutput y, scan_out1;\nwire q, qb;\n"
                              "sff r (.D(a), .SI(scan_in1), .SE(scan_en), .CLK(CLK), .Q(q), .QB(qb));\n"
                              "inv02 i (.A(a), .Y(y));\nassign scan_out1 = q;\nendmodule\n" );
  auto const chains = trace_chains( nl );
  std::mt19937_64 rng( 1 );
  auto const patterns = random_patterns( rng, nl, chains, 8 );
  for ( bool v : { false, true } )
  {
    EXPECT_LE( sensitivity( nl, chains, patterns, "r", v ), 0 );
    EXPECT_EQ( sensitivity( nl, chains, patterns, "r", v ), sensitivity_forced( nl, chains, patterns, "r", v ) );
  }
}

// Differential oracle: all six (cell, value) freezes simulated directly.
TEST( Rank, S27TopMatchesExhaustiveOracle )
{
  auto const& s = s27();
  auto const base = total_shift_toggles( s.design, s.chains, s.atpg.patterns );
  std::string best;
  std::int64_t best_score = 0;
  bool first = true;
  for ( auto const& cell : { reg0, reg1, reg2 } )
    for ( bool v : { false, true } )
    {
      sim_options o;
      o.freezes.push_back( { cell, v } );
      auto const score = static_cast<std::int64_t>( base ) -
                         static_cast<std::int64_t>( total_shift_toggles( s.design, s.chains, s.atpg.patterns, o ) );
      if ( first || score > best_score || ( score == best_score && cell < best ) )
      {
        best = cell;
        best_score = score;
        first = false;
      }
    }
  auto const plan = rank_cells( s.design, s.chains, s.atpg.patterns, 1 );
  ASSERT_EQ( plan.entries.size(), 1u );
  EXPECT_EQ( plan.entries[0].cell, best );
  EXPECT_EQ( plan.entries[0].score, best_score );
  EXPECT_EQ( plan.entries[0].cell, reg1 );
  EXPECT_EQ( plan.evaluated.size(), 6u );
}

TEST( Rank, TopKCapsAndErrors )
{
  auto const& s = s27();
  EXPECT_EQ( rank_cells( s.design, s.chains, s.atpg.patterns, 10 ).entries.size(), 3u );
  EXPECT_THROW( rank_cells( s.design, s.chains, s.atpg.patterns, 0 ), std::invalid_argument );
}

TEST( Rank, SingleCell )
{
  auto nl = parse_bench( "INPUT(a)\nOUTPUT(y)\nq = DFF(y)\ny = NAND(a, q)\n" );
  scan_config cfg;
  auto const [design, chains] = insert_scan( nl, cfg );
  std::mt19937_64 rng( 2 );
  auto const plan = rank_cells( design, chains, random_patterns( rng, design, chains, 8 ), 3 );
  ASSERT_EQ( plan.entries.size(), 1u );
  EXPECT_EQ( plan.entries[0].cell, chains.chains[0].cells[0] );
}

// The kept entry is the best score over the cell's two values, and
// entries come out in descending score.
TEST( Rank, DominanceProperty )
{
  std::mt19937_64 rng( 5 );
  for ( int t = 0; t < 15; ++t )
  {
    random_shape shape{ 3, 3 + static_cast<std::size_t>( t % 5 ), 10 + static_cast<std::size_t>( t ), 2,
                        t % 2 == 0 };
    auto const d = random_scan_design( rng, shape );
    auto const patterns = random_patterns( rng, d.design, d.chains, 8 );
    auto const plan = rank_cells( d.design, d.chains, patterns, 100 );
    for ( std::size_t i = 1; i < plan.entries.size(); ++i )
      EXPECT_GE( plan.entries[i - 1].score, plan.entries[i].score );
    for ( auto const& e : plan.entries )
      for ( auto const& ev : plan.evaluated )
        if ( ev.cell == e.cell )
        {
          EXPECT_GE( e.score, ev.score );
        }
    ASSERT_FALSE( plan.entries.empty() );
    for ( auto const& ev : plan.evaluated )
      EXPECT_GE( plan.entries[0].score, ev.score );
  }
}

TEST( Rank, IndependentOfJobs )
{
  std::mt19937_64 rng( 8 );
  auto const d = random_scan_design( rng, { 4, 6, 25, 3, true } );
  auto const patterns = random_patterns( rng, d.design, d.chains, 10 );
  auto const a = rank_cells( d.design, d.chains, patterns, 4, 1 );
  auto const b = rank_cells( d.design, d.chains, patterns, 4, 8 );
  EXPECT_EQ( a.entries, b.entries );
  EXPECT_EQ( a.evaluated, b.evaluated );
}

TEST( StructuralScore, S27 )
{
  auto const nl = s27_scan();
  EXPECT_EQ( structural_score( nl, reg1 ), 7u );
  EXPECT_EQ( structural_score( nl, reg2 ), 7u );
  EXPECT_EQ( structural_score( nl, reg0 ), 3u );
}

TEST( StructuralScore, Unconnected )
{
  auto nl = parse_vlog( "module m (a, y, scan_in1, scan_en, CLK);\n"
                        "input a, scan_in1, scan_en, CLK;\noutput y;\nwire q, qb;\n"
                        "sff r (.D(a), .SI(scan_in1), .SE(scan_en), .CLK(CLK), .Q(q), .QB(qb));\n"
                        "inv02 i (.A(a), .Y(y));\nendmodule\n" );
  EXPECT_EQ( structural_score( nl, "r" ), 0u );
}
