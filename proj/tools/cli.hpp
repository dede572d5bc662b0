#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <scanpower/json_io.hpp>
#include <scanpower/scanpower.hpp>

namespace scanpower::cli
{

inline constexpr char const* tool_name = "scanpower";
inline constexpr char const* tool_version = "0.1.0";

enum exit_code : int
{
  ok = 0,
  usage = 2,
  invalid_input = 3,
  sim_mismatch = 4
};

/// Raised for anything that should end the run with exit code 3.
struct input_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Raised for argument combinations CLI11 cannot express.
struct usage_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex( std::string const& data )
{
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if ( EVP_Digest( data.data(), data.size(), digest, &len, EVP_sha256(), nullptr ) != 1 )
    throw std::runtime_error( "sha256 failed" );
  std::ostringstream out;
  for ( unsigned i = 0; i < len; ++i )
    out << std::hex << std::setw( 2 ) << std::setfill( '0' ) << static_cast<int>( digest[i] );
  return out.str();
}

class run_context
{
public:
  explicit run_context( std::ostream& err ) : err_( err ) {}

  std::ostream& err() { return err_; }

  std::string read_input( std::string const& role, std::string const& path )
  {
    std::ifstream in( path, std::ios::binary );
    if ( !in )
      throw input_error( path + ": cannot open file" );
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto text = buffer.str();
    inputs_.push_back( { { "role", role }, { "path", path }, { "sha256", sha256_hex( text ) } } );
    return text;
  }

  void write_output( std::string const& path, std::string const& text )
  {
    std::ofstream out( path, std::ios::binary );
    if ( !out || !( out << text ) )
      throw input_error( path + ": cannot write file" );
  }

  void write_json( std::string const& path, std::string const& subcommand, json const& config, json payload )
  {
    json doc;
    doc["manifest"] = { { "tool", tool_name },
                        { "version", tool_version },
                        { "subcommand", subcommand },
                        { "inputs", inputs_ },
                        { "seed", seed },
                        { "config", config } };
    for ( auto& [key, value] : payload.items() )
      doc[key] = value;
    write_output( path, doc.dump( 2 ) + "\n" );
  }

  std::uint64_t seed = 0;

private:
  std::ostream& err_;
  json inputs_ = json::array();
};

enum class netlist_format
{
  automatic,
  bench,
  vlog
};

inline netlist load_netlist( run_context& ctx, std::string const& path, netlist_format format )
{
  auto const text = ctx.read_input( "netlist", path );
  if ( format == netlist_format::automatic )
  {
    auto const ext = std::filesystem::path( path ).extension().string();
    if ( ext == ".bench" )
      format = netlist_format::bench;
    else if ( ext == ".v" )
      format = netlist_format::vlog;
    else
      throw usage_error( path + ": unknown netlist extension '" + ext + "'; use --format bench|vlog" );
  }
  try
  {
    auto stem = std::filesystem::path( path ).stem().string();
    return format == netlist_format::bench ? parse_bench( text, stem.empty() ? "top" : stem ) : parse_vlog( text );
  }
  catch ( parse_error const& e )
  {
    throw input_error( path + ": " + e.what() );
  }
}

/// Parse and require a clean validate.
inline netlist load_valid_netlist( run_context& ctx, std::string const& path, netlist_format format )
{
  auto nl = load_netlist( ctx, path, format );
  auto const diags = validate( nl );
  for ( auto const& d : diags )
    ctx.err() << path << ": " << d.message << "\n";
  if ( !diags.empty() )
    throw input_error( path + ": netlist failed validation" );
  return nl;
}

inline chain_map load_chain_map( run_context& ctx, std::string const& path, netlist const& nl )
{
  auto const text = ctx.read_input( "chainmap", path );
  chain_map map;
  try
  {
    map = chain_map_from_json( json::parse( text ) );
  }
  catch ( std::exception const& e )
  {
    throw input_error( path + ": invalid chain map: " + e.what() );
  }
  // The chain map must describe this netlist's actual scan wiring.
  chain_map traced;
  try
  {
    traced = trace_chains( nl );
  }
  catch ( netlist_error const& e )
  {
    throw input_error( path + ": " + e.what() );
  }
  if ( traced != map )
    throw input_error( path + ": chain map does not match the netlist's scan chains" );
  return map;
}

inline std::vector<scan_pattern> load_patterns( run_context& ctx, std::string const& path, netlist const& nl,
                                                chain_map const& chains )
{
  auto const text = ctx.read_input( "patterns", path );
  try
  {
    auto f = read_scanpat( text );
    check_scanpat( f, nl, chains );
    simulator const sim( nl, chains );
    for ( std::size_t i = 0; i < f.patterns.size(); ++i )
      check_pattern( sim, f.patterns[i], i );
    return std::move( f.patterns );
  }
  catch ( parse_error const& e )
  {
    throw input_error( path + ": " + e.what() );
  }
  catch ( pattern_error const& e )
  {
    throw input_error( path + ": " + e.what() );
  }
}

inline std::string scanpat_text( netlist const& nl, chain_map const& chains, std::vector<scan_pattern> patterns,
                                 std::string const& provenance )
{
  return "# " + std::string( tool_name ) + " " + tool_version + " " + provenance + "\n" +
         write_scanpat( make_scanpat( nl, chains, std::move( patterns ) ) );
}

inline void require_vlog_path( std::string const& path )
{
  if ( std::filesystem::path( path ).extension() != ".v" )
    throw usage_error( path + ": netlists are written as structural Verilog (.v)" );
}

/// Entry point; `args` excludes the program name.
inline int cli_main( std::vector<std::string> const& args, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr )
{
  CLI::App app{ "Scan insertion, ATPG, shift-power analysis and freeze-gate insertion", tool_name };
  app.require_subcommand( 1 );
  app.fallthrough();
  app.set_version_flag( "--version", tool_version );

  std::string format_name = "auto";
  std::size_t jobs = 1;
  app.add_option( "--format", format_name, "Netlist format override" )
      ->check( CLI::IsMember( { "auto", "bench", "vlog" } ) );
  app.add_option( "--jobs", jobs, "Worker threads (results do not depend on it)" )->check( CLI::Range( 1, 256 ) );

  std::string netlist_path;
  auto add_netlist = [&]( CLI::App* sub ) { sub->add_option( "netlist", netlist_path, "Input netlist" )->required(); };

  auto* check = app.add_subcommand( "check", "Parse and validate a netlist" );
  add_netlist( check );

  std::size_t n_chains = 1;
  std::string stitch_name = "q";
  std::string order_path;
  std::string partition_name = "contiguous";
  std::string out_path;
  std::string chainmap_path;
  auto* scan_insert = app.add_subcommand( "scan-insert", "Replace DFFs by scan cells and stitch chains" );
  add_netlist( scan_insert );
  scan_insert->add_option( "--chains", n_chains, "Number of chains" )->required()->check( CLI::PositiveNumber );
  scan_insert->add_option( "--stitch", stitch_name, "Scan path through Q or QB" )
      ->required()
      ->check( CLI::IsMember( { "q", "qb" } ) );
  scan_insert->add_option( "--order", order_path, "File listing the scan order" );
  scan_insert->add_option( "--partition", partition_name, "Chain partition policy" )
      ->check( CLI::IsMember( { "contiguous", "round-robin" } ) );
  scan_insert->add_option( "--out", out_path, "Output netlist (.v)" )->required();
  scan_insert->add_option( "--chainmap", chainmap_path, "Output chain map (JSON)" )->required();

  std::uint64_t seed = 0;
  std::size_t random_budget = atpg_config{}.random_budget;
  std::string report_path;
  auto* atpg = app.add_subcommand( "atpg", "Generate stuck-at patterns" );
  add_netlist( atpg );
  atpg->add_option( "--chainmap", chainmap_path, "Chain map (JSON)" )->required();
  atpg->add_option( "--seed", seed, "Random seed" );
  atpg->add_option( "--random-budget", random_budget, "Random patterns tried before PODEM" );
  atpg->add_option( "--out", out_path, "Output patterns (SCANPAT)" )->required();
  atpg->add_option( "--report", report_path, "Output fault report (JSON)" )->required();

  std::string patterns_path;
  std::string toggles_path;
  std::string table_path;
  auto* sim = app.add_subcommand( "sim", "Apply patterns and count toggles" );
  add_netlist( sim );
  sim->add_option( "--chainmap", chainmap_path, "Chain map (JSON)" )->required();
  sim->add_option( "--patterns", patterns_path, "Patterns (SCANPAT)" )->required();
  sim->add_option( "--toggles", toggles_path, "Output toggle statistics (JSON)" )->required();
  sim->add_option( "--table", table_path, "Output flip-flop pair toggle table (text)" );

  std::size_t top_k = 1;
  auto* rank = app.add_subcommand( "rank", "Rank scan cells by freeze sensitivity" );
  add_netlist( rank );
  rank->add_option( "--chainmap", chainmap_path, "Chain map (JSON)" )->required();
  rank->add_option( "--patterns", patterns_path, "Patterns (SCANPAT)" )->required();
  rank->add_option( "--top", top_k, "Entries to keep" )->required()->check( CLI::PositiveNumber );
  rank->add_option( "--out", out_path, "Output freeze plan (JSON)" )->required();

  std::string cell_name;
  int freeze_value = 0;
  std::string log_path;
  std::string repatterns_path;
  auto* freeze = app.add_subcommand( "freeze", "Insert a freeze gate after a scan cell" );
  add_netlist( freeze );
  freeze->add_option( "--cell", cell_name, "Scan cell to freeze" )->required();
  freeze->add_option( "--value", freeze_value, "Frozen value" )->required()->check( CLI::IsMember( { 0, 1 } ) );
  freeze->add_option( "--out", out_path, "Output netlist (.v)" )->required();
  freeze->add_option( "--log", log_path, "Output transform log (JSON)" )->required();
  auto* repat = freeze->add_option( "--repatterns", repatterns_path, "Re-emit patterns for the frozen netlist" );
  auto* frz_pat = freeze->add_option( "--patterns", patterns_path, "Patterns to re-emit (SCANPAT)" );
  auto* frz_map = freeze->add_option( "--chainmap", chainmap_path, "Chain map (JSON)" );
  repat->needs( frz_pat )->needs( frz_map );
  frz_pat->needs( repat );

  bool want_area = false;
  bool want_test_time = false;
  auto* report = app.add_subcommand( "report", "Area and test-time figures" );
  add_netlist( report );
  report->add_flag( "--area", want_area, "Gate-equivalent area" );
  auto* tt = report->add_flag( "--test-time", want_test_time, "Tester clocks for a pattern set" );
  auto* rep_pat = report->add_option( "--patterns", patterns_path, "Patterns (SCANPAT)" );
  report->add_option( "--chainmap", chainmap_path, "Chain map (JSON); traced from the netlist when absent" );
  report->add_option( "--out", out_path, "Output report (JSON)" )->required();
  tt->needs( rep_pat );

  std::vector<std::string> argv_rev( args.rbegin(), args.rend() );
  try
  {
    app.parse( argv_rev );
  }
  catch ( CLI::CallForHelp const& )
  {
    out << app.help();
    return ok;
  }
  catch ( CLI::CallForVersion const& )
  {
    out << tool_version << "\n";
    return ok;
  }
  catch ( CLI::ParseError const& e )
  {
    err << tool_name << ": " << e.what() << "\n";
    return usage;
  }

  auto const format = format_name == "bench" ? netlist_format::bench
                      : format_name == "vlog" ? netlist_format::vlog
                                              : netlist_format::automatic;
  run_context ctx( err );

  try
  {
    if ( check->parsed() )
    {
      auto nl = load_netlist( ctx, netlist_path, format );
      auto const diags = validate( nl );
      for ( auto const& d : diags )
        err << netlist_path << ": " << d.message << "\n";
      if ( !diags.empty() )
        return invalid_input;
      out << netlist_path << ": ok (" << nl.num_cells() << " cells, " << flip_flops( nl ).size() << " flip-flops)\n";
      return ok;
    }

    if ( scan_insert->parsed() )
    {
      require_vlog_path( out_path );
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      scan_config config;
      config.n_chains = n_chains;
      config.stitch = stitch_from_string( stitch_name );
      config.partition = partition_name == "round-robin" ? partition_policy::round_robin : partition_policy::contiguous;
      if ( !order_path.empty() )
      {
        std::istringstream in( ctx.read_input( "order", order_path ) );
        std::vector<std::string> order;
        for ( std::string name; in >> name; )
          order.push_back( name );
        config.order = order;
      }
      auto const n_ffs = flip_flops( nl ).size();
      if ( n_chains > n_ffs )
        throw usage_error( "--chains " + std::to_string( n_chains ) + " exceeds the " + std::to_string( n_ffs ) +
                           " flip-flops" );
      auto [scanned, map] = insert_scan( nl, config );
      ctx.write_output( out_path, emit_vlog( scanned ) );
      json cfg = { { "chains", n_chains },
                   { "stitch", stitch_name },
                   { "partition", partition_name },
                   { "order", config.order ? json( *config.order ) : json( nullptr ) } };
      ctx.write_json( chainmap_path, "scan-insert", cfg, to_json( map ) );
      return ok;
    }

    if ( atpg->parsed() )
    {
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      auto chains = load_chain_map( ctx, chainmap_path, nl );
      ctx.seed = seed;
      atpg_config config;
      config.seed = seed;
      config.random_budget = random_budget;
      config.jobs = jobs;
      auto result = generate_patterns( nl, chains, config );
      ctx.write_output( out_path, scanpat_text( nl, chains, result.patterns,
                                                "atpg seed " + std::to_string( seed ) + " random-budget " +
                                                    std::to_string( random_budget ) ) );
      json cfg = { { "random_budget", random_budget }, { "backtrack_limit", config.backtrack_limit } };
      ctx.write_json( report_path, "atpg", cfg, { { "report", to_json( result.report ) } } );
      return ok;
    }

    if ( sim->parsed() )
    {
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      auto chains = load_chain_map( ctx, chainmap_path, nl );
      auto patterns = load_patterns( ctx, patterns_path, nl, chains );
      auto const r = run_patterns( nl, chains, patterns );
      json mismatches = json::array();
      for ( auto const& m : r.mismatches )
      {
        mismatches.push_back( { { "pattern", m.pattern },
                                { "where", m.where },
                                { "expected", std::string( 1, m.expected ) },
                                { "observed", std::string( 1, m.observed ) } } );
        err << patterns_path << ": pattern " << m.pattern << " " << m.where << ": expected " << m.expected
            << ", observed " << m.observed << "\n";
      }
      json payload = to_json( r.toggles );
      payload["patterns"] = patterns.size();
      payload["shift_cycles"] = patterns.empty() ? 0 : ( patterns.size() + 1 ) * chains.max_length();
      payload["mismatches"] = mismatches;
      ctx.write_json( toggles_path, "sim", json::object(), payload );
      if ( !table_path.empty() )
        ctx.write_output( table_path, render_toggle_table( toggle_table( nl, r.toggles ) ) );
      return r.mismatches.empty() ? ok : sim_mismatch;
    }

    if ( rank->parsed() )
    {
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      auto chains = load_chain_map( ctx, chainmap_path, nl );
      auto patterns = load_patterns( ctx, patterns_path, nl, chains );
      auto const plan = rank_cells( nl, chains, patterns, top_k, jobs );
      json payload = to_json( plan );
      payload["baseline_shift_toggles"] = total_shift_toggles( nl, chains, patterns );
      json structural = json::object();
      for ( auto id : flip_flops( nl ) )
        structural[nl.get( id ).name] = structural_score( nl, nl.get( id ).name );
      payload["structural_score"] = structural;
      ctx.write_json( out_path, "rank", { { "top", top_k } }, payload );
      return ok;
    }

    if ( freeze->parsed() )
    {
      require_vlog_path( out_path );
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      std::optional<chain_map> chains;
      std::vector<scan_pattern> patterns;
      if ( !repatterns_path.empty() )
      {
        chains = load_chain_map( ctx, chainmap_path, nl );
        patterns = load_patterns( ctx, patterns_path, nl, *chains );
      }
      auto result = insert_freeze( nl, cell_name, freeze_value == 1 );
      for ( auto const& w : result.log.warnings )
        err << "warning: " << w << "\n";
      ctx.write_output( out_path, emit_vlog( result.design ) );
      ctx.write_json( log_path, "freeze", { { "cell", cell_name }, { "value", freeze_value } },
                      { { "transform", to_json( result.log ) } } );
      if ( chains )
      {
        auto regenerated = with_expected_values( result.design, *chains, std::move( patterns ) );
        ctx.write_output( repatterns_path,
                          scanpat_text( result.design, *chains, std::move( regenerated ),
                                        "freeze " + cell_name + "=" + std::to_string( freeze_value ) ) );
      }
      return ok;
    }

    if ( report->parsed() )
    {
      if ( !want_area && !want_test_time )
        throw usage_error( "report: nothing requested; pass --area and/or --test-time" );
      auto nl = load_valid_netlist( ctx, netlist_path, format );
      json payload = json::object();
      json cfg = { { "area", want_area }, { "test_time", want_test_time } };
      if ( want_area )
      {
        json census = json::object();
        for ( auto kind : all_cell_kinds )
        {
          std::size_t n = 0;
          for ( auto const& c : nl.cells() )
            n += c.kind == kind;
          if ( n )
            census[std::string( library_name( kind ) )] = n;
        }
        payload["area"] = { { "gate_equivalents", area( nl ) }, { "cells", census } };
      }
      if ( want_test_time )
      {
        chain_map chains;
        if ( chainmap_path.empty() )
        {
          try
          {
            chains = trace_chains( nl );
          }
          catch ( netlist_error const& e )
          {
            throw input_error( netlist_path + ": " + e.what() );
          }
        }
        else
          chains = load_chain_map( ctx, chainmap_path, nl );
        auto const patterns = load_patterns( ctx, patterns_path, nl, chains );
        payload["test_time"] = { { "patterns", patterns.size() },
                                 { "chains", chains.chains.size() },
                                 { "max_chain_length", chains.max_length() },
                                 { "clocks", test_clocks( patterns.size(), chains.max_length() ) } };
      }
      ctx.write_json( out_path, "report", cfg, payload );
      return ok;
    }
  }
  catch ( usage_error const& e )
  {
    err << tool_name << ": " << e.what() << "\n";
    return usage;
  }
  catch ( input_error const& e )
  {
    err << tool_name << ": " << e.what() << "\n";
    return invalid_input;
  }
  catch ( std::exception const& e )
  {
    err << tool_name << ": " << e.what() << "\n";
    return invalid_input;
  }
  return usage;
}

} // namespace scanpower::cli
