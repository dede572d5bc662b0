#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support/random_netlist.hpp"

using namespace scanpower;
using namespace scanpower::testing;
namespace fs = std::filesystem;

namespace
{

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ( std::string( "scanpower_cli_" ) + ::testing::UnitTest::GetInstance()->current_test_info()->name() );
    fs::remove_all( dir_ );
    fs::create_directories( dir_ );
  }
  void TearDown() override { fs::remove_all( dir_ ); }

  std::string path( std::string const& name ) const { return ( dir_ / name ).string(); }

  void write( std::string const& name, std::string const& text ) const { std::ofstream( path( name ) ) << text; }

  int run( std::vector<std::string> args )
  {
    out_.str( "" );
    err_.str( "" );
    return cli::cli_main( args, out_, err_ );
  }

  // Scanned s27, its chain map and the default ATPG patterns.
  void prepare()
  {
    write( "s27.v", read_file( data_path( "s27_scan.v" ) ) );
    auto const nl = s27_scan();
    auto doc = to_json( trace_chains( nl ) );
    write( "chains.json", doc.dump( 2 ) );
    ASSERT_EQ( run( { "atpg", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--out", path( "s27.pat" ),
                      "--report", path( "report.json" ) } ),
               0 )
        << err_.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

} // namespace

TEST_F( Cli, HelpAndVersion )
{
  EXPECT_EQ( run( { "--help" } ), 0 );
  EXPECT_NE( out_.str().find( "scan-insert" ), std::string::npos );
  EXPECT_EQ( run( { "--version" } ), 0 );
  EXPECT_EQ( out_.str(), "0.1.0\n" );
}

TEST_F( Cli, UsageErrors )
{
  EXPECT_EQ( run( {} ), 2 );
  EXPECT_EQ( run( { "bogus" } ), 2 );
  EXPECT_EQ( run( { "check" } ), 2 );
  EXPECT_EQ( run( { "--jobs", "0", "check", "x.v" } ), 2 );
  write( "s27.bench", read_file( data_path( "s27.bench" ) ) );
  EXPECT_EQ( run( { "scan-insert", path( "s27.bench" ), "--chains", "1", "--out", path( "x.bench" ), "--chainmap",
                    path( "c.json" ) } ),
             2 );
  EXPECT_EQ( run( { "scan-insert", path( "s27.bench" ), "--chains", "4", "--out", path( "x.v" ), "--chainmap",
                    path( "c.json" ) } ),
             2 );
  EXPECT_EQ( run( { "report", path( "s27.bench" ), "--out", path( "r.json" ) } ), 2 );
  write( "s27.txt", read_file( data_path( "s27.bench" ) ) );
  EXPECT_EQ( run( { "check", path( "s27.txt" ) } ), 2 );
}

TEST_F( Cli, InvalidInputs )
{
  EXPECT_EQ( run( { "check", path( "missing.v" ) } ), 3 );
  write( "bad.bench", "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n" );
  EXPECT_EQ( run( { "check", path( "bad.bench" ) } ), 3 );
  EXPECT_NE( err_.str().find( "line 3" ), std::string::npos ) << err_.str();
  write( "loop.bench", "INPUT(a)\nOUTPUT(y)\ny = AND(a, z)\nz = NOT(y)\n" );
  EXPECT_EQ( run( { "check", path( "loop.bench" ) } ), 3 );
}

TEST_F( Cli, CheckAndFormatOverride )
{
  write( "s27.txt", read_file( data_path( "s27.bench" ) ) );
  EXPECT_EQ( run( { "check", path( "s27.txt" ), "--format", "bench" } ), 0 ) << err_.str();
  EXPECT_NE( out_.str().find( "ok (13 cells, 3 flip-flops)" ), std::string::npos ) << out_.str();
}

TEST_F( Cli, ManifestRecordsInputDigests )
{
  prepare();
  auto const doc = json::parse( read_file( path( "report.json" ) ) );
  auto const& m = doc.at( "manifest" );
  EXPECT_EQ( m.at( "tool" ), "scanpower" );
  EXPECT_EQ( m.at( "version" ), "0.1.0" );
  EXPECT_EQ( m.at( "subcommand" ), "atpg" );
  EXPECT_EQ( m.at( "seed" ), 0 );
  ASSERT_EQ( m.at( "inputs" ).size(), 2u );
  EXPECT_EQ( m.at( "inputs" )[0].at( "role" ), "netlist" );
  EXPECT_EQ( m.at( "inputs" )[0].at( "sha256" ), cli::sha256_hex( read_file( path( "s27.v" ) ) ) );
  EXPECT_EQ( cli::sha256_hex( "abc" ), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad" );
  EXPECT_GE( doc.at( "report" ).at( "test_coverage" ).get<double>(), 100.0 );
}

TEST_F( Cli, SimMismatchExitCode )
{
  prepare();
  ASSERT_EQ( run( { "sim", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--patterns", path( "s27.pat" ),
                    "--toggles", path( "t.json" ) } ),
             0 )
      << err_.str();
  auto text = read_file( path( "s27.pat" ) );
  auto const at = text.find( "PO " ) + 3;
  text[at] = text[at] == '1' ? '0' : '1';
  write( "bad.pat", text );
  EXPECT_EQ( run( { "sim", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--patterns", path( "bad.pat" ),
                    "--toggles", path( "t.json" ) } ),
             4 );
  auto const doc = json::parse( read_file( path( "t.json" ) ) );
  EXPECT_EQ( doc.at( "mismatches" ).size(), 1u );
}

TEST_F( Cli, ChainMapMustMatchNetlist )
{
  prepare();
  write( "wrong.json", R"({"stitch": "q", "chains": {"chain1": ["reg_d_out_2_", "reg_d_out_1_", "reg_d_out_0_"]}})" );
  EXPECT_EQ( run( { "sim", path( "s27.v" ), "--chainmap", path( "wrong.json" ), "--patterns", path( "s27.pat" ),
                    "--toggles", path( "t.json" ) } ),
             3 );
}

TEST_F( Cli, ResultsIndependentOfJobs )
{
  prepare();
  auto const atpg = [&]( std::string const& jobs, std::string const& tag ) {
    EXPECT_EQ( run( { "--jobs", jobs, "atpg", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--seed", "7",
                      "--out", path( tag + ".pat" ), "--report", path( tag + ".json" ) } ),
               0 );
    EXPECT_EQ( run( { "rank", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--patterns", path( tag + ".pat" ),
                      "--top", "3", "--out", path( tag + "_plan.json" ), "--jobs", jobs } ),
               0 );
  };
  atpg( "1", "one" );
  atpg( "8", "eight" );
  EXPECT_EQ( read_file( path( "one.pat" ) ), read_file( path( "eight.pat" ) ) );
  EXPECT_EQ( read_file( path( "one.json" ) ), read_file( path( "eight.json" ) ) );
  auto plan = [&]( std::string const& tag ) {
    auto doc = json::parse( read_file( path( tag + "_plan.json" ) ) );
    doc.erase( "manifest" );
    return doc.dump();
  };
  EXPECT_EQ( plan( "one" ), plan( "eight" ) );
}

TEST_F( Cli, FreezePipelineReducesShiftToggles )
{
  prepare();
  auto const sim = [&]( std::string const& netlist, std::string const& pat, std::string const& out ) {
    EXPECT_EQ( run( { "sim", path( netlist ), "--chainmap", path( "chains.json" ), "--patterns", path( pat ),
                      "--toggles", path( out ) } ),
               0 )
        << err_.str();
    return json::parse( read_file( path( out ) ) ).at( "totals" ).at( "shift" ).get<std::uint64_t>();
  };
  auto const before = sim( "s27.v", "s27.pat", "t0.json" );
  ASSERT_EQ( run( { "rank", path( "s27.v" ), "--chainmap", path( "chains.json" ), "--patterns", path( "s27.pat" ),
                    "--top", "1", "--out", path( "plan.json" ) } ),
             0 );
  auto const plan = json::parse( read_file( path( "plan.json" ) ) );
  auto const cell = plan.at( "entries" )[0].at( "cell" ).get<std::string>();
  auto const value = plan.at( "entries" )[0].at( "value" ).get<int>();
  EXPECT_EQ( cell, "reg_d_out_1_" );
  ASSERT_EQ( run( { "freeze", path( "s27.v" ), "--cell", cell, "--value", std::to_string( value ), "--out",
                    path( "frozen.v" ), "--log", path( "log.json" ), "--patterns", path( "s27.pat" ), "--chainmap",
                    path( "chains.json" ), "--repatterns", path( "frozen.pat" ) } ),
             0 )
      << err_.str();
  EXPECT_EQ( run( { "check", path( "frozen.v" ) } ), 0 );
  auto const after = sim( "frozen.v", "frozen.pat", "t1.json" );
  EXPECT_LT( after, before );
  EXPECT_EQ( static_cast<std::int64_t>( before - after ), plan.at( "entries" )[0].at( "score" ).get<std::int64_t>() );
  auto const log = json::parse( read_file( path( "log.json" ) ) );
  EXPECT_EQ( log.at( "transform" ).at( "rewired" ), json::array( { "ix155.A0" } ) );
}

TEST_F( Cli, FreezeRepatternsNeedsInputs )
{
  prepare();
  EXPECT_EQ( run( { "freeze", path( "s27.v" ), "--cell", "reg_d_out_1_", "--value", "0", "--out", path( "f.v" ),
                    "--log", path( "l.json" ), "--repatterns", path( "f.pat" ) } ),
             2 );
  EXPECT_EQ( run( { "freeze", path( "s27.v" ), "--cell", "ix155", "--value", "0", "--out", path( "f.v" ), "--log",
                    path( "l.json" ) } ),
             3 );
}

TEST_F( Cli, ScanInsertAndReport )
{
  write( "s27.bench", read_file( data_path( "s27.bench" ) ) );
  write( "order.txt", "reg_G7 reg_G6 reg_G5\n" );
  ASSERT_EQ( run( { "scan-insert", path( "s27.bench" ), "--chains", "1", "--stitch", "qb", "--order", path( "order.txt" ),
                    "--out", path( "s.v" ), "--chainmap", path( "c.json" ) } ),
             0 )
      << err_.str();
  EXPECT_TRUE( isomorphic( parse_vlog( read_file( path( "s.v" ) ) ), s27_scan() ) );
  ASSERT_EQ( run( { "report", path( "s.v" ), "--area", "--out", path( "area.json" ) } ), 0 ) << err_.str();
  auto const doc = json::parse( read_file( path( "area.json" ) ) );
  EXPECT_DOUBLE_EQ( doc.at( "area" ).at( "gate_equivalents" ).get<double>(), 28.5 );
  EXPECT_EQ( doc.at( "area" ).at( "cells" ).at( "sff" ), 3 );

  ASSERT_EQ( run( { "scan-insert", path( "s27.bench" ), "--chains", "3", "--stitch", "q", "--out", path( "s3.v" ), "--chainmap",
                    path( "c3.json" ) } ),
             0 );
  ASSERT_EQ( run( { "atpg", path( "s3.v" ), "--chainmap", path( "c3.json" ), "--out", path( "s3.pat" ), "--report",
                    path( "r3.json" ) } ),
             0 );
  ASSERT_EQ( run( { "report", path( "s3.v" ), "--test-time", "--patterns", path( "s3.pat" ), "--out", path( "t.json" ) } ),
             0 )
      << err_.str();
  auto const tt = json::parse( read_file( path( "t.json" ) ) ).at( "test_time" );
  EXPECT_EQ( tt.at( "max_chain_length" ), 1 );
  EXPECT_EQ( tt.at( "clocks" ), test_clocks( tt.at( "patterns" ).get<std::size_t>(), 1 ) );
}
