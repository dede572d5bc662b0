#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "scanpower/netlist.hpp"

namespace scanpower
{

namespace detail
{

/// Netlist flattened into a vertex-coloured graph: cells, connected nets
/// and output ports are vertices; edges carry the port role.
struct labelled_graph
{
  enum class vertex_type : std::uint8_t
  {
    cell,
    net,
    output
  };

  struct vertex
  {
    vertex_type type;
    std::uint32_t ref; // cell id, net id, or output index
    std::string label;
  };

  std::vector<vertex> vertices;
  std::vector<std::vector<std::pair<std::string, std::uint32_t>>> edges;
  std::vector<std::int64_t> vertex_of_net;
  std::vector<std::int64_t> vertex_of_cell;

  explicit labelled_graph( netlist const& nl )
  {
    connectivity const conn( nl );
    vertex_of_net.assign( nl.num_nets(), -1 );
    vertex_of_cell.assign( nl.num_cells(), -1 );

    for ( std::size_t i = 0; i < nl.num_nets(); ++i )
    {
      net_id const id{ i };
      auto const& n = nl.get( id );
      bool const used = nl.is_input( id ) || n.constant || !conn.cell_drivers( id ).empty() ||
                        !conn.readers( id ).empty() || !conn.output_readers( id ).empty();
      if ( !used )
        continue;
      std::string label = "net";
      if ( nl.is_input( id ) )
        label = "pi:" + n.name;
      else if ( n.constant )
        label = *n.constant ? "const1" : "const0";
      if ( nl.clock() == id )
        label += "/clk";
      if ( nl.scan_enable() == id )
        label += "/se";
      vertex_of_net[i] = static_cast<std::int64_t>( vertices.size() );
      vertices.push_back( { vertex_type::net, static_cast<std::uint32_t>( i ), label } );
    }
    for ( std::size_t i = 0; i < nl.num_cells(); ++i )
    {
      vertex_of_cell[i] = static_cast<std::int64_t>( vertices.size() );
      vertices.push_back(
          { vertex_type::cell, static_cast<std::uint32_t>( i ), std::string( library_name( nl.cells()[i].kind ) ) } );
    }
    auto const outs = nl.outputs();
    std::vector<std::int64_t> vertex_of_output( outs.size() );
    for ( std::size_t i = 0; i < outs.size(); ++i )
    {
      vertex_of_output[i] = static_cast<std::int64_t>( vertices.size() );
      vertices.push_back( { vertex_type::output, static_cast<std::uint32_t>( i ), "po:" + outs[i].name } );
    }

    edges.resize( vertices.size() );
    auto link = [&]( std::int64_t a, std::int64_t b, std::string const& role ) {
      edges[a].emplace_back( role, static_cast<std::uint32_t>( b ) );
      edges[b].emplace_back( role, static_cast<std::uint32_t>( a ) );
    };
    for ( std::size_t i = 0; i < nl.num_cells(); ++i )
    {
      auto const& c = nl.cells()[i];
      for ( std::size_t p = 0; p < c.pins.size(); ++p )
      {
        if ( !c.pins[p].valid() )
          continue;
        std::string role = has_symmetric_inputs( c.kind ) && !is_output_port( c.kind, p )
                               ? std::string( "in" )
                               : std::string( port_names( c.kind )[p] );
        link( vertex_of_cell[i], vertex_of_net[c.pins[p].get()], role );
      }
    }
    for ( std::size_t i = 0; i < outs.size(); ++i )
    {
      if ( outs[i].net.valid() )
        link( vertex_of_output[i], vertex_of_net[outs[i].net.get()], "po" );
    }
  }
};

class isomorphism_search
{
public:
  isomorphism_search( netlist const& a, netlist const& b ) : a_( a ), b_( b ), ga_( a ), gb_( b ) {}

  bool run()
  {
    if ( ga_.vertices.size() != gb_.vertices.size() )
      return false;
    std::map<std::string, std::uint32_t> initial;
    for ( auto const* g : { &ga_, &gb_ } )
      for ( auto const& v : g->vertices )
        initial.try_emplace( v.label, static_cast<std::uint32_t>( initial.size() ) );
    std::vector<std::uint32_t> ca, cb;
    for ( auto const& v : ga_.vertices )
      ca.push_back( initial.at( v.label ) );
    for ( auto const& v : gb_.vertices )
      cb.push_back( initial.at( v.label ) );
    return search( ca, cb, static_cast<std::uint32_t>( initial.size() ), 0 );
  }

private:
  using colouring = std::vector<std::uint32_t>;

  /// Colour refinement on both graphs with a shared signature table, so
  /// colours stay comparable. Returns the number of colours.
  std::uint32_t refine( colouring& ca, colouring& cb ) const
  {
    std::size_t classes = 0;
    while ( true )
    {
      using signature = std::pair<std::uint32_t, std::vector<std::pair<std::string, std::uint32_t>>>;
      std::map<signature, std::uint32_t> table;
      auto step = [&]( labelled_graph const& g, colouring const& c ) {
        colouring next( c.size() );
        for ( std::size_t v = 0; v < c.size(); ++v )
        {
          signature s{ c[v], {} };
          for ( auto const& [role, u] : g.edges[v] )
            s.second.emplace_back( role, c[u] );
          std::sort( s.second.begin(), s.second.end() );
          next[v] = table.try_emplace( std::move( s ), static_cast<std::uint32_t>( table.size() ) ).first->second;
        }
        return next;
      };
      auto na = step( ga_, ca );
      auto nb = step( gb_, cb );
      ca = std::move( na );
      cb = std::move( nb );
      if ( table.size() == classes )
        return static_cast<std::uint32_t>( table.size() );
      classes = table.size();
    }
  }

  bool search( colouring ca, colouring cb, std::uint32_t, int depth )
  {
    auto const ncolours = refine( ca, cb );
    std::vector<std::vector<std::uint32_t>> members_a( ncolours ), members_b( ncolours );
    for ( std::size_t v = 0; v < ca.size(); ++v )
      members_a[ca[v]].push_back( static_cast<std::uint32_t>( v ) );
    for ( std::size_t v = 0; v < cb.size(); ++v )
      members_b[cb[v]].push_back( static_cast<std::uint32_t>( v ) );
    std::optional<std::uint32_t> split;
    for ( std::uint32_t c = 0; c < ncolours; ++c )
    {
      if ( members_a[c].size() != members_b[c].size() )
        return false;
      if ( members_a[c].size() > 1 && ( !split || members_a[c].size() < members_a[*split].size() ) )
        split = c;
    }
    if ( !split )
      return verify( ca, cb );
    if ( depth > 64 )
      return false;
    auto const a = members_a[*split].front();
    for ( auto b : members_b[*split] )
    {
      auto xa = ca;
      auto xb = cb;
      xa[a] = ncolours;
      xb[b] = ncolours;
      if ( search( xa, xb, ncolours + 1, depth + 1 ) )
        return true;
    }
    return false;
  }

  bool verify( colouring const& ca, colouring const& cb ) const
  {
    std::map<std::uint32_t, std::uint32_t> vertex_b_of_colour;
    for ( std::size_t v = 0; v < cb.size(); ++v )
      vertex_b_of_colour[cb[v]] = static_cast<std::uint32_t>( v );
    std::vector<std::uint32_t> map( ca.size() );
    for ( std::size_t v = 0; v < ca.size(); ++v )
    {
      map[v] = vertex_b_of_colour.at( ca[v] );
      if ( ga_.vertices[v].label != gb_.vertices[map[v]].label )
        return false;
    }
    auto net_map = [&]( net_id n ) -> std::int64_t {
      if ( !n.valid() )
        return -1;
      return gb_.vertices[map[ga_.vertex_of_net[n.get()]]].ref;
    };
    for ( std::size_t i = 0; i < a_.num_cells(); ++i )
    {
      auto const& ca_cell = a_.cells()[i];
      auto const& cb_cell = b_.cells()[gb_.vertices[map[ga_.vertex_of_cell[i]]].ref];
      if ( ca_cell.kind != cb_cell.kind )
        return false;
      std::vector<std::int64_t> pa, pb;
      for ( auto n : ca_cell.pins )
        pa.push_back( net_map( n ) );
      for ( auto n : cb_cell.pins )
        pb.push_back( n.valid() ? static_cast<std::int64_t>( n.get() ) : -1 );
      if ( has_symmetric_inputs( ca_cell.kind ) )
      {
        std::sort( pa.begin(), pa.begin() + 2 );
        std::sort( pb.begin(), pb.begin() + 2 );
      }
      if ( pa != pb )
        return false;
    }
    for ( std::size_t i = 0; i < a_.outputs().size(); ++i )
    {
      auto const& oa = a_.outputs()[i];
      auto ob = b_.find_output( oa.name );
      if ( !ob || net_map( oa.net ) != static_cast<std::int64_t>( b_.outputs()[*ob].net.get() ) )
        return false;
    }
    return a_.outputs().size() == b_.outputs().size() && a_.inputs().size() == b_.inputs().size();
  }

  netlist const& a_;
  netlist const& b_;
  labelled_graph ga_;
  labelled_graph gb_;
};

} // namespace detail

/// True when the two netlists are the same circuit up to renaming of
/// internal nets and cells: port names, cell kinds and connectivity must
/// match (inputs of AND/OR/NAND/NOR are unordered).
inline bool isomorphic( netlist const& a, netlist const& b ) { return detail::isomorphism_search( a, b ).run(); }

/// Name-respecting equality: same ports in the same order, same cells by
/// name with the same kind, and pins bound to nets of the same name.
inline bool structurally_equal( netlist const& a, netlist const& b )
{
  auto name_of = [&]( netlist const& nl, net_id n ) { return n.valid() ? nl.get( n ).name : std::string{}; };
  if ( a.inputs().size() != b.inputs().size() || a.outputs().size() != b.outputs().size() ||
       a.num_cells() != b.num_cells() )
    return false;
  for ( std::size_t i = 0; i < a.inputs().size(); ++i )
    if ( name_of( a, a.inputs()[i] ) != name_of( b, b.inputs()[i] ) )
      return false;
  for ( std::size_t i = 0; i < a.outputs().size(); ++i )
  {
    if ( a.outputs()[i].name != b.outputs()[i].name ||
         name_of( a, a.outputs()[i].net ) != name_of( b, b.outputs()[i].net ) )
      return false;
  }
  for ( auto const& ca : a.cells() )
  {
    auto id = b.find_cell( ca.name );
    if ( !id )
      return false;
    auto const& cb = b.get( *id );
    if ( ca.kind != cb.kind )
      return false;
    std::vector<std::string> pa, pb;
    for ( auto n : ca.pins )
      pa.push_back( name_of( a, n ) );
    for ( auto n : cb.pins )
      pb.push_back( name_of( b, n ) );
    if ( has_symmetric_inputs( ca.kind ) )
    {
      std::sort( pa.begin(), pa.begin() + 2 );
      std::sort( pb.begin(), pb.begin() + 2 );
    }
    if ( pa != pb )
      return false;
  }
  for ( auto const& na : a.nets() )
  {
    if ( !na.constant )
      continue;
    auto id = b.find_net( na.name );
    if ( !id || b.get( *id ).constant != na.constant )
      return false;
  }
  auto designated = []( netlist const& nl, std::optional<net_id> n ) {
    return n ? nl.get( *n ).name : std::string{};
  };
  return designated( a, a.clock() ) == designated( b, b.clock() ) &&
         designated( a, a.scan_enable() ) == designated( b, b.scan_enable() );
}

} // namespace scanpower
