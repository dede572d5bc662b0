#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scanpower/analysis.hpp"
#include "scanpower/bench.hpp"
#include "scanpower/errors.hpp"
#include "scanpower/netlist.hpp"

namespace scanpower
{

namespace detail
{

struct vlog_token
{
  enum class type
  {
    identifier,
    number,
    literal, // sized constant such as 1'b0
    symbol,
    end
  };
  type kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class vlog_lexer
{
public:
  explicit vlog_lexer( std::string_view text ) : text_( text ) {}

  std::vector<vlog_token> tokenize()
  {
    std::vector<vlog_token> out;
    while ( true )
    {
      skip_space_and_comments();
      if ( pos_ >= text_.size() )
      {
        out.push_back( { vlog_token::type::end, "", line_, column() } );
        return out;
      }
      auto const start_line = line_;
      auto const start_col = column();
      char const c = text_[pos_];
      if ( c == '\\' )
      {
        auto const begin = pos_++;
        while ( pos_ < text_.size() && !std::isspace( static_cast<unsigned char>( text_[pos_] ) ) )
          ++pos_;
        out.push_back( { vlog_token::type::identifier, std::string( text_.substr( begin, pos_ - begin ) ),
                         start_line, start_col } );
      }
      else if ( std::isalpha( static_cast<unsigned char>( c ) ) || c == '_' )
      {
        auto const begin = pos_;
        while ( pos_ < text_.size() &&
                ( std::isalnum( static_cast<unsigned char>( text_[pos_] ) ) || text_[pos_] == '_' || text_[pos_] == '$' ) )
          ++pos_;
        out.push_back( { vlog_token::type::identifier, std::string( text_.substr( begin, pos_ - begin ) ),
                         start_line, start_col } );
      }
      else if ( std::isdigit( static_cast<unsigned char>( c ) ) )
      {
        auto const begin = pos_;
        while ( pos_ < text_.size() && std::isdigit( static_cast<unsigned char>( text_[pos_] ) ) )
          ++pos_;
        if ( pos_ < text_.size() && text_[pos_] == '\'' )
        {
          ++pos_;
          while ( pos_ < text_.size() && std::isalnum( static_cast<unsigned char>( text_[pos_] ) ) )
            ++pos_;
          out.push_back( { vlog_token::type::literal, std::string( text_.substr( begin, pos_ - begin ) ),
                           start_line, start_col } );
        }
        else
        {
          out.push_back( { vlog_token::type::number, std::string( text_.substr( begin, pos_ - begin ) ), start_line,
                           start_col } );
        }
      }
      else
      {
        ++pos_;
        out.push_back( { vlog_token::type::symbol, std::string( 1, c ), start_line, start_col } );
      }
    }
  }

private:
  std::size_t column() const { return pos_ - line_start_ + 1; }

  void advance()
  {
    if ( text_[pos_] == '\n' )
    {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  void skip_space_and_comments()
  {
    while ( pos_ < text_.size() )
    {
      if ( std::isspace( static_cast<unsigned char>( text_[pos_] ) ) )
      {
        advance();
      }
      else if ( text_.substr( pos_, 2 ) == "//" )
      {
        while ( pos_ < text_.size() && text_[pos_] != '\n' )
          advance();
      }
      else if ( text_.substr( pos_, 2 ) == "/*" )
      {
        auto const line = line_;
        auto const col = column();
        pos_ += 2;
        while ( pos_ < text_.size() && text_.substr( pos_, 2 ) != "*/" )
          advance();
        if ( pos_ >= text_.size() )
          throw parse_error( line, col, "unterminated block comment" );
        pos_ += 2;
      }
      else
      {
        return;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

class vlog_parser
{
public:
  explicit vlog_parser( std::string_view text ) : tokens_( vlog_lexer( text ).tokenize() ) {}

  netlist parse()
  {
    expect_word( "module" );
    module_name_ = canonical_name( expect_identifier().text );
    expect( "(" );
    if ( !accept( ")" ) )
    {
      do
      {
        auto const& t = expect_identifier();
        header_ports_.push_back( { canonical_name( t.text ), t } );
      } while ( accept( "," ) );
      expect( ")" );
    }
    expect( ";" );

    while ( !peek_word( "endmodule" ) )
    {
      auto const& t = peek();
      if ( t.kind == vlog_token::type::end )
        error( t, "missing endmodule" );
      if ( peek_word( "input" ) || peek_word( "output" ) || peek_word( "wire" ) )
        parse_declaration();
      else if ( peek_word( "assign" ) )
        parse_assign();
      else if ( t.kind == vlog_token::type::identifier )
        parse_instance();
      else
        error( t, "unexpected '" + t.text + "'" );
    }
    next();
    if ( peek().kind != vlog_token::type::end )
      error( peek(), "text after endmodule" );
    return build();
  }

private:
  struct instance_stmt
  {
    vlog_token where;
    cell_kind kind;
    std::string name;
    std::vector<std::optional<std::string>> pins;
  };

  struct assign_stmt
  {
    vlog_token where;
    std::string lhs;
    std::string rhs;            // empty when constant
    std::optional<bool> constant;
  };

  struct header_port
  {
    std::string name;
    vlog_token where;
  };

  [[noreturn]] void error( vlog_token const& t, std::string const& msg ) const
  {
    throw parse_error( t.line, t.column, msg );
  }

  vlog_token const& peek() const { return tokens_[pos_]; }
  vlog_token const& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool peek_word( std::string_view w ) const
  {
    return peek().kind == vlog_token::type::identifier && peek().text == w;
  }

  bool accept( std::string_view sym )
  {
    if ( peek().kind == vlog_token::type::symbol && peek().text == sym )
    {
      next();
      return true;
    }
    return false;
  }

  void expect( std::string_view sym )
  {
    if ( !accept( sym ) )
      error( peek(), "expected '" + std::string( sym ) + "', found '" + peek().text + "'" );
  }

  void expect_word( std::string_view w )
  {
    if ( !peek_word( w ) )
      error( peek(), "expected '" + std::string( w ) + "'" );
    next();
  }

  vlog_token const& expect_identifier()
  {
    if ( peek().kind != vlog_token::type::identifier )
      error( peek(), "expected identifier, found '" + peek().text + "'" );
    return next();
  }

  long expect_number()
  {
    if ( peek().kind != vlog_token::type::number )
      error( peek(), "expected number" );
    return std::stol( next().text );
  }

  /// identifier, optionally followed by a bit select `[n]`.
  std::string parse_net_ref()
  {
    auto const& t = expect_identifier();
    std::string name = canonical_name( t.text );
    if ( accept( "[" ) )
    {
      auto bit = expect_number();
      expect( "]" );
      name += "_" + std::to_string( bit ) + "_";
    }
    return name;
  }

  void parse_declaration()
  {
    auto const& kw = next();
    std::optional<std::pair<long, long>> range;
    if ( accept( "[" ) )
    {
      auto msb = expect_number();
      expect( ":" );
      auto lsb = expect_number();
      expect( "]" );
      range = { msb, lsb };
    }
    do
    {
      auto const& t = expect_identifier();
      auto base = canonical_name( t.text );
      std::vector<std::string> names;
      if ( range )
      {
        long const step = range->first >= range->second ? -1 : 1;
        for ( long i = range->first;; i += step )
        {
          names.push_back( base + "_" + std::to_string( i ) + "_" );
          if ( i == range->second )
            break;
        }
      }
      else
      {
        names.push_back( base );
      }
      for ( auto& n : names )
      {
        if ( kw.text == "input" )
        {
          if ( std::find( input_decls_.begin(), input_decls_.end(), n ) != input_decls_.end() )
            error( t, "input '" + n + "' declared twice" );
          input_decls_.push_back( n );
          decl_where_.try_emplace( n, t );
        }
        else if ( kw.text == "output" )
        {
          if ( std::find( output_decls_.begin(), output_decls_.end(), n ) != output_decls_.end() )
            error( t, "output '" + n + "' declared twice" );
          output_decls_.push_back( n );
          decl_where_.try_emplace( n, t );
        }
        // wires are implicit in this subset; the declaration only reserves the name
      }
      if ( range && kw.text != "wire" )
        vector_ports_[base] = names;
    } while ( accept( "," ) );
    expect( ";" );
  }

  void parse_assign()
  {
    auto const where = next();
    assign_stmt a{ where, parse_net_ref(), "", std::nullopt };
    expect( "=" );
    if ( peek().kind == vlog_token::type::literal )
    {
      auto const& lit = next();
      if ( lit.text == "1'b0" || lit.text == "1'B0" )
        a.constant = false;
      else if ( lit.text == "1'b1" || lit.text == "1'B1" )
        a.constant = true;
      else
        error( lit, "unsupported literal '" + lit.text + "'" );
    }
    else if ( peek().kind == vlog_token::type::identifier )
    {
      a.rhs = parse_net_ref();
    }
    else
    {
      error( peek(), "expressions are not supported in assign" );
    }
    if ( !accept( ";" ) )
      error( peek(), "expressions are not supported in assign (found '" + peek().text + "')" );
    assigns_.push_back( std::move( a ) );
  }

  void parse_instance()
  {
    auto const& kind_tok = next();
    auto kind = kind_from_library_name( kind_tok.text );
    if ( !kind )
      error( kind_tok, "unknown cell kind '" + kind_tok.text + "'" );
    instance_stmt inst{ kind_tok, *kind, canonical_name( expect_identifier().text ), {} };
    inst.pins.resize( port_count( *kind ) );
    std::vector<bool> seen( port_count( *kind ), false );
    expect( "(" );
    if ( !accept( ")" ) )
    {
      do
      {
        if ( peek().kind == vlog_token::type::symbol && peek().text != "." )
          error( peek(), "expected .PORT ( net )" );
        if ( !accept( "." ) )
          error( peek(), "positional connections are not supported; expected .PORT ( net )" );
        auto const& port_tok = expect_identifier();
        auto port = port_index( *kind, port_tok.text );
        if ( !port )
          error( port_tok, "cell kind " + kind_tok.text + " has no port '" + port_tok.text + "'" );
        if ( seen[*port] )
          error( port_tok, "port '" + port_tok.text + "' connected twice" );
        seen[*port] = true;
        expect( "(" );
        if ( accept( ")" ) )
        {
          if ( !( is_sequential( *kind ) && is_output_port( *kind, *port ) ) )
            error( port_tok, "port '" + port_tok.text + "' of " + inst.name + " left unbound" );
          continue;
        }
        if ( peek().kind == vlog_token::type::literal )
          error( peek(), "constants must be driven through assign" );
        inst.pins[*port] = parse_net_ref();
        expect( ")" );
      } while ( accept( "," ) );
      expect( ")" );
    }
    expect( ";" );
    for ( std::size_t p = 0; p < seen.size(); ++p )
    {
      if ( !seen[p] )
        error( kind_tok, "port '" + std::string( port_names( *kind )[p] ) + "' of " + inst.name + " is unbound" );
    }
    instances_.push_back( std::move( inst ) );
  }

  netlist build()
  {
    // Header and direction declarations must agree.
    std::set<std::string> header;
    for ( auto const& hp : header_ports_ )
    {
      header.insert( hp.name );
      bool declared = std::count( input_decls_.begin(), input_decls_.end(), hp.name ) ||
                      std::count( output_decls_.begin(), output_decls_.end(), hp.name ) ||
                      vector_ports_.count( hp.name );
      if ( !declared )
        error( hp.where, "port '" + hp.name + "' has no direction declaration" );
    }
    auto in_header = [&]( std::string const& bit ) {
      if ( header.count( bit ) )
        return true;
      for ( auto const& [base, bits] : vector_ports_ )
        if ( header.count( base ) && std::count( bits.begin(), bits.end(), bit ) )
          return true;
      return false;
    };
    for ( auto const& n : input_decls_ )
      if ( !in_header( n ) )
        error( decl_where_.at( n ), "input '" + n + "' is not in the module port list" );
    for ( auto const& n : output_decls_ )
      if ( !in_header( n ) )
        error( decl_where_.at( n ), "output '" + n + "' is not in the module port list" );

    // assign lhs = rhs makes lhs another name for rhs.
    std::unordered_map<std::string, std::string> alias;
    std::unordered_map<std::string, bool> constants;
    std::set<std::string> const inputs( input_decls_.begin(), input_decls_.end() );
    for ( auto const& a : assigns_ )
    {
      if ( inputs.count( a.lhs ) )
        error( a.where, "assign drives input '" + a.lhs + "'" );
      if ( alias.count( a.lhs ) || constants.count( a.lhs ) )
        error( a.where, "'" + a.lhs + "' assigned more than once" );
      if ( a.constant )
        constants[a.lhs] = *a.constant;
      else
        alias[a.lhs] = a.rhs;
    }
    auto resolve = [&]( std::string name, vlog_token const& where ) {
      std::size_t hops = 0;
      while ( true )
      {
        auto it = alias.find( name );
        if ( it == alias.end() )
          return name;
        name = it->second;
        if ( ++hops > alias.size() )
          error( where, "circular assign involving '" + name + "'" );
      }
    };

    netlist nl( module_name_ );
    for ( auto const& n : input_decls_ )
      nl.add_input( nl.add_net( n ) );
    for ( auto const& a : assigns_ )
    {
      if ( a.constant )
        nl.set_constant( nl.net_or_add( a.lhs ), *a.constant );
    }
    for ( auto const& inst : instances_ )
    {
      if ( nl.find_cell( inst.name ) )
        error( inst.where, "instance '" + inst.name + "' defined twice" );
      std::vector<net_id> pins;
      for ( auto const& p : inst.pins )
        pins.push_back( p ? nl.net_or_add( resolve( *p, inst.where ) ) : net_id{} );
      nl.add_cell( inst.name, inst.kind, std::move( pins ) );
    }
    for ( auto const& a : assigns_ )
    {
      if ( !a.constant )
        nl.net_or_add( resolve( a.rhs, a.where ) );
    }
    for ( auto const& n : output_decls_ )
    {
      auto const target = alias.count( n ) ? resolve( n, tokens_.front() ) : n;
      nl.add_output( n, nl.net_or_add( target ) );
    }

    // Clock and scan enable are whatever the flip-flops' CLK / SE pins see.
    for ( auto const& c : nl.cells() )
    {
      if ( !is_sequential( c.kind ) )
        continue;
      auto const ports = flip_flop_ports( c.kind );
      if ( !nl.clock() && c.pins[ports.clk].valid() )
        nl.set_clock( c.pins[ports.clk] );
      if ( ports.se && !nl.scan_enable() && c.pins[*ports.se].valid() )
        nl.set_scan_enable( c.pins[*ports.se] );
    }
    return nl;
  }

  std::vector<vlog_token> tokens_;
  std::size_t pos_ = 0;
  std::string module_name_;
  std::vector<header_port> header_ports_;
  std::vector<std::string> input_decls_;
  std::unordered_map<std::string, vlog_token> decl_where_;
  std::vector<std::string> output_decls_;
  std::map<std::string, std::vector<std::string>> vector_ports_;
  std::vector<instance_stmt> instances_;
  std::vector<assign_stmt> assigns_;
};

} // namespace detail

/// Parse the structural Verilog subset: one module of primitive instances
/// with named port connections and alias-only `assign` statements.
inline netlist parse_vlog( std::string_view text ) { return detail::vlog_parser( text ).parse(); }

inline netlist parse_vlog( std::istream& in )
{
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_vlog( buffer.str() );
}

/// Write a netlist in the structural Verilog subset. Output is
/// deterministic: ports in declaration order, wires and cells sorted by
/// name, one instance per line.
inline std::string emit_vlog( netlist const& nl )
{
  std::ostringstream os;
  connectivity const conn( nl );

  auto join = []( std::vector<std::string> const& items ) {
    std::string s;
    for ( std::size_t i = 0; i < items.size(); ++i )
      s += ( i ? " , " : "" ) + items[i];
    return s;
  };

  std::vector<std::string> in_names, out_names, header;
  std::set<std::string> port_names_set;
  for ( auto n : nl.inputs() )
  {
    in_names.push_back( nl.get( n ).name );
    if ( port_names_set.insert( in_names.back() ).second )
      header.push_back( in_names.back() );
  }
  for ( auto const& o : nl.outputs() )
  {
    out_names.push_back( o.name );
    if ( port_names_set.insert( o.name ).second )
      header.push_back( o.name );
  }

  os << "module " << nl.name() << " ( " << join( header ) << " );\n";
  if ( !in_names.empty() )
    os << "input " << join( in_names ) << " ;\n";
  if ( !out_names.empty() )
    os << "output " << join( out_names ) << " ;\n";

  std::vector<std::string> wires;
  for ( std::size_t i = 0; i < nl.num_nets(); ++i )
  {
    auto const& n = nl.get( net_id{ i } );
    if ( port_names_set.count( n.name ) )
      continue;
    bool const used = n.constant || !conn.cell_drivers( net_id{ i } ).empty() || !conn.readers( net_id{ i } ).empty() ||
                      !conn.output_readers( net_id{ i } ).empty();
    if ( used )
      wires.push_back( n.name );
  }
  std::sort( wires.begin(), wires.end() );
  if ( !wires.empty() )
    os << "wire " << join( wires ) << " ;\n";

  std::vector<cell_id> order;
  nl.foreach_cell( [&]( cell_id id, cell const& ) { order.push_back( id ); } );
  std::sort( order.begin(), order.end(),
             [&]( cell_id a, cell_id b ) { return nl.get( a ).name < nl.get( b ).name; } );
  for ( auto id : order )
  {
    auto const& c = nl.get( id );
    auto const names = port_names( c.kind );
    os << library_name( c.kind ) << " " << c.name << " (";
    for ( std::size_t p = 0; p < c.pins.size(); ++p )
    {
      os << ( p ? " , ." : " ." ) << names[p] << " (";
      if ( c.pins[p].valid() )
        os << " " << nl.get( c.pins[p] ).name << " )";
      else
        os << " )";
    }
    os << " );\n";
  }

  for ( std::size_t i = 0; i < nl.num_nets(); ++i )
  {
    auto const& n = nl.get( net_id{ i } );
    if ( n.constant )
      os << "assign " << n.name << " = " << ( *n.constant ? "1'b1" : "1'b0" ) << " ;\n";
  }
  for ( auto const& o : nl.outputs() )
  {
    if ( o.net.valid() && nl.get( o.net ).name != o.name )
      os << "assign " << o.name << " = " << nl.get( o.net ).name << " ;\n";
  }
  os << "endmodule\n";
  return os.str();
}

} // namespace scanpower
