#include <gtest/gtest.h>

#include "support/random_netlist.hpp"

using namespace scanpower;
using namespace scanpower::testing;

namespace
{

std::string const sample = "SCANPAT 1\n"
                           "CHAINS chain1:3\n"
                           "INPUTS G0 G1 G2 G3\n"
                           "OUTPUTS G17\n"
                           "PATTERN 0\n"
                           "LOAD chain1 010\n"
                           "PI 0110\n"
                           "PO 1\n"
                           "UNLOAD chain1 101\n"
                           "END\n";

std::size_t error_line( std::string const& text )
{
  try
  {
    read_scanpat( text );
  }
  catch ( parse_error const& e )
  {
    return e.line();
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return 0;
}

std::string replace( std::string text, std::string const& from, std::string const& to )
{
  text.replace( text.find( from ), from.size(), to );
  return text;
}

} // namespace

TEST( Scanpat, ReadSample )
{
  auto const f = read_scanpat( sample );
  ASSERT_EQ( f.chains.size(), 1u );
  EXPECT_EQ( f.chains[0], ( std::pair<std::string, std::size_t>{ "chain1", 3 } ) );
  EXPECT_EQ( f.inputs, ( std::vector<std::string>{ "G0", "G1", "G2", "G3" } ) );
  ASSERT_EQ( f.patterns.size(), 1u );
  EXPECT_EQ( f.patterns[0], ( scan_pattern{ { "010" }, "0110", "1", { "101" } } ) );
  EXPECT_EQ( write_scanpat( f ), sample );
  auto const& s = s27();
  EXPECT_NO_THROW( check_scanpat( f, s.design, s.chains ) );
}

TEST( Scanpat, CommentsAndEmptyLists )
{
  auto const f = read_scanpat( "# header\nSCANPAT 1\nCHAINS\nINPUTS\nOUTPUTS y\n# between\nPATTERN 0\nPI\nPO 0\nEND\n" );
  EXPECT_TRUE( f.chains.empty() );
  EXPECT_TRUE( f.inputs.empty() );
  ASSERT_EQ( f.patterns.size(), 1u );
  EXPECT_EQ( f.patterns[0].expected_po, "0" );
}

TEST( Scanpat, StrictWhitespace )
{
  EXPECT_EQ( error_line( replace( sample, "PI 0110", "PI  0110" ) ), 7u );
  EXPECT_EQ( error_line( replace( sample, "PI 0110", "PI 0110 " ) ), 7u );
  EXPECT_EQ( error_line( replace( sample, "INPUTS G0 G1", "INPUTS G0  G1" ) ), 3u );
  EXPECT_EQ( error_line( replace( sample, "PO 1\n", "PO 1\r\n" ) ), 8u );
}

TEST( Scanpat, Rejections )
{
  EXPECT_EQ( error_line( replace( sample, "SCANPAT 1", "SCANPAT 2" ) ), 1u );
  EXPECT_EQ( error_line( replace( sample, "LOAD chain1 010", "LOAD chain1 01" ) ), 6u );
  EXPECT_EQ( error_line( replace( sample, "LOAD chain1 010", "LOAD chain2 010" ) ), 6u );
  EXPECT_EQ( error_line( replace( sample, "PI 0110", "PI 01z0" ) ), 7u );
  EXPECT_EQ( error_line( replace( sample, "PATTERN 0", "PATTERN 1" ) ), 5u );
  EXPECT_EQ( error_line( replace( sample, "END", "END now" ) ), 10u );
  EXPECT_EQ( error_line( replace( sample, "CHAINS chain1:3", "CHAINS chain1" ) ), 2u );
}

TEST( Scanpat, TruncationIsLineNumbered )
{
  // A cut right after the header is a valid empty pattern list.
  auto const header_end = sample.find( "PATTERN 0" );
  for ( std::size_t cut = 1; cut + 1 < sample.size(); ++cut )
  {
    if ( cut == header_end )
      continue;
    auto const text = sample.substr( 0, cut );
    try
    {
      read_scanpat( text );
      ADD_FAILURE() << "accepted truncation at " << cut;
    }
    catch ( parse_error const& e )
    {
      EXPECT_GE( e.line(), 1u );
      EXPECT_LE( e.line(), 11u );
    }
  }
}

TEST( Scanpat, CheckAgainstNetlist )
{
  auto const& s = s27();
  auto f = read_scanpat( sample );
  f.inputs[0] = "G9";
  EXPECT_THROW( check_scanpat( f, s.design, s.chains ), pattern_error );
  f = read_scanpat( replace( replace( replace( sample, "chain1:3", "chain1:2" ), "010", "01" ), "UNLOAD chain1 101", "UNLOAD chain1 10" ) );
  EXPECT_THROW( check_scanpat( f, s.design, s.chains ), pattern_error );
}

TEST( Scanpat, RoundTripGeneratedPatterns )
{
  auto const& s = s27();
  auto const f = make_scanpat( s.design, s.chains, s.atpg.patterns );
  auto const text = write_scanpat( f );
  auto const back = read_scanpat( text );
  EXPECT_EQ( back, f );
  EXPECT_EQ( write_scanpat( back ), text );
}

TEST( Scanpat, EmptyExpectationsWrittenAsUnknown )
{
  auto const& s = s27();
  auto const f = make_scanpat( s.design, s.chains, { scan_pattern{ { "010" }, "0110", {}, {} } } );
  auto const text = write_scanpat( f );
  EXPECT_NE( text.find( "PO X\n" ), std::string::npos );
  EXPECT_NE( text.find( "UNLOAD chain1 XXX\n" ), std::string::npos );
}
