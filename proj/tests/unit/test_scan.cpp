#include <gtest/gtest.h>

#include <random>

#include "support/cosim.hpp"
#include "support/random_netlist.hpp"

using namespace scanpower;
using namespace scanpower::testing;

namespace
{

scan_config reference_config()
{
  scan_config config;
  config.stitch = stitch_mode::qb;
  config.order = std::vector<std::string>{ "reg_G7", "reg_G6", "reg_G5" };
  return config;
}

std::vector<std::vector<std::string>> cells_of( chain_map const& m )
{
  std::vector<std::vector<std::string>> out;
  for ( auto const& c : m.chains )
    out.push_back( c.cells );
  return out;
}

} // namespace

TEST( Partition, Examples )
{
  std::vector<std::string> const abc{ "a", "b", "c" };
  std::vector<std::vector<std::string>> const singles{ { "a" }, { "b" }, { "c" } };
  EXPECT_EQ( cells_of( partition_chains( abc, 3, partition_policy::contiguous ) ), singles );
  EXPECT_EQ( cells_of( partition_chains( abc, 3, partition_policy::round_robin ) ), singles );
  std::vector<std::string> const five{ "a", "b", "c", "d", "e" };
  EXPECT_EQ( cells_of( partition_chains( five, 2, partition_policy::contiguous ) ),
             ( std::vector<std::vector<std::string>>{ { "a", "b", "c" }, { "d", "e" } } ) );
  EXPECT_EQ( cells_of( partition_chains( five, 2, partition_policy::round_robin ) ),
             ( std::vector<std::vector<std::string>>{ { "a", "c", "e" }, { "b", "d" } } ) );
  EXPECT_THROW( partition_chains( abc, 0, partition_policy::contiguous ), std::invalid_argument );
  EXPECT_THROW( partition_chains( abc, 4, partition_policy::contiguous ), std::invalid_argument );
}

TEST( Partition, LengthsBalanced )
{
  for ( std::size_t total = 1; total <= 12; ++total )
    for ( std::size_t n = 1; n <= total; ++n )
      for ( auto policy : { partition_policy::contiguous, partition_policy::round_robin } )
      {
        std::vector<std::string> ffs;
        for ( std::size_t i = 0; i < total; ++i )
          ffs.push_back( "f" + std::to_string( i ) );
        auto const m = partition_chains( ffs, n, policy );
        ASSERT_EQ( m.chains.size(), n );
        std::size_t lo = total, hi = 0, sum = 0;
        for ( auto const& c : m.chains )
        {
          lo = std::min( lo, c.cells.size() );
          hi = std::max( hi, c.cells.size() );
          sum += c.cells.size();
        }
        EXPECT_EQ( sum, total );
        EXPECT_LE( hi - lo, 1u );
      }
}

TEST( InsertScan, ReproducesReferenceNetlist )
{
  auto [scanned, map] = insert_scan( s27_bench(), reference_config() );
  EXPECT_TRUE( validate( scanned ).empty() );
  EXPECT_TRUE( isomorphic( scanned, s27_scan() ) );
  EXPECT_TRUE( isomorphic( parse_vlog( emit_vlog( scanned ) ), s27_scan() ) );
  ASSERT_EQ( map.chains.size(), 1u );
  EXPECT_EQ( map.chains[0].cells, ( std::vector<std::string>{ "reg_G7", "reg_G6", "reg_G5" } ) );
  // scan_out1 is QB of the last cell.
  auto const& last = scanned.get( scanned.cell_named( "reg_G5" ) );
  EXPECT_EQ( scanned.outputs()[*scanned.find_output( "scan_out1" )].net,
             last.pins[flip_flop_ports( cell_kind::sff ).qb] );
  EXPECT_EQ( trace_chains( scanned ), map );
}

TEST( InsertScan, TraceReferenceNetlist )
{
  auto const m = trace_chains( s27_scan() );
  EXPECT_EQ( m.stitch, stitch_mode::qb );
  EXPECT_EQ( cells_of( m ),
             ( std::vector<std::vector<std::string>>{ { "reg_d_out_2_", "reg_d_out_1_", "reg_d_out_0_" } } ) );
  EXPECT_EQ( m.chains[0].scan_in, "scan_in1" );
  EXPECT_EQ( m.chains[0].scan_out, "scan_out1" );
}

TEST( InsertScan, SingleFlipFlopQStitch )
{
  auto nl = parse_bench( "INPUT(a)\nOUTPUT(q)\nq = DFF(a)\n" );
  auto [scanned, map] = insert_scan( nl, {} );
  auto const& ff = scanned.get( scanned.cell_named( "reg_q" ) );
  auto const p = flip_flop_ports( cell_kind::sff );
  EXPECT_EQ( ff.kind, cell_kind::sff );
  EXPECT_EQ( scanned.get( ff.pins[*p.si] ).name, "scan_in1" );
  EXPECT_EQ( scanned.outputs()[*scanned.find_output( "scan_out1" )].net, ff.pins[p.q] );
  EXPECT_EQ( scanned.outputs()[*scanned.find_output( "q" )].net, ff.pins[p.q] );
  EXPECT_TRUE( validate( scanned ).empty() );
}

TEST( InsertScan, ThreeChainsOfOne )
{
  scan_config config;
  config.n_chains = 3;
  auto [scanned, map] = insert_scan( s27_bench(), config );
  ASSERT_EQ( map.chains.size(), 3u );
  for ( auto const& c : map.chains )
    EXPECT_EQ( c.cells.size(), 1u );
  EXPECT_EQ( map.max_length(), 1u );
  EXPECT_TRUE( validate( scanned ).empty() );
  EXPECT_EQ( trace_chains( scanned ), map );
}

TEST( InsertScan, Errors )
{
  auto nl = s27_bench();
  scan_config config;
  config.n_chains = 4;
  EXPECT_THROW( insert_scan( nl, config ), std::exception );
  config.n_chains = 1;
  config.order = std::vector<std::string>{ "reg_G5", "reg_G6" };
  EXPECT_THROW( insert_scan( nl, config ), std::exception );
  config.order = std::vector<std::string>{ "reg_G5", "reg_G6", "reg_G6" };
  EXPECT_THROW( insert_scan( nl, config ), std::exception );
  auto once = insert_scan( nl, {} ).first;
  EXPECT_THROW( insert_scan( once, {} ), netlist_error );
  EXPECT_THROW( insert_scan( parse_bench( "INPUT(a)\nOUTPUT(a)\n" ), {} ), netlist_error );
}

TEST( InsertScan, InputUntouched )
{
  auto nl = s27_bench();
  auto const before = emit_vlog( nl );
  (void)insert_scan( nl, reference_config() );
  EXPECT_EQ( emit_vlog( nl ), before );
}

TEST( InsertScan, FunctionalPreservation )
{
  std::mt19937_64 rng( 5 );
  {
    auto nl = s27_bench();
    EXPECT_EQ( cosimulate( nl, insert_scan( nl, reference_config() ).first, 1000, rng ), 0u );
  }
  for ( int t = 0; t < 20; ++t )
  {
    auto nl = random_netlist( rng, { 3, 4, 20, 3, t % 2 == 0 } );
    scan_config config;
    config.n_chains = 1 + t % 3;
    config.stitch = t % 2 ? stitch_mode::qb : stitch_mode::q;
    EXPECT_EQ( cosimulate( nl, insert_scan( nl, config ).first, 1000, rng ), 0u ) << t;
  }
}

// An L-bit marker shifted for L cycles lands in the chain exactly.
TEST( InsertScan, ChainReachability )
{
  std::mt19937_64 rng( 6 );
  for ( int t = 0; t < 40; ++t )
  {
    auto const d = random_scan_design( rng, { 2, 1 + rng() % 6, 10, 2, t % 2 == 0 } );
    simulator const sim( d.design, d.chains );
    scan_session session( sim );
    std::vector<std::string> marker;
    for ( auto const& c : d.chains.chains )
    {
      std::string m;
      for ( std::size_t i = 0; i < c.cells.size(); ++i )
        m += rng() % 2 ? '1' : '0';
      marker.push_back( m );
    }
    session.load( marker );
    EXPECT_EQ( session.shift_cycles(), d.chains.max_length() );
    for ( std::size_t k = 0; k < d.chains.chains.size(); ++k )
      for ( std::size_t i = 0; i < marker[k].size(); ++i )
        EXPECT_EQ( to_char( session.state().ffs[sim.chain_cells( k )[i]] ), marker[k][i] ) << t;
  }
}
