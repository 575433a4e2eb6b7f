#pragma once

// Graph renderings: Graphviz DOT for people, a structured document for
// programs (the workbench consumes it through the service).

#include "wire.hpp"

#include <sstream>

namespace pact
{

namespace detail
{

inline std::string dot_escape( std::string_view text )
{
    std::string out;
    for ( const char c : text )
    {
        if ( c == '"' || c == '\\' )
            out += '\\';
        out += c;
    }
    return out;
}

} // namespace detail

// Nodes are numbered in canonical-key order, edges follow build order, so the
// output is a pure function of the graph.
inline std::string export_dot( const StateGraph& graph, std::string_view name = "contract" )
{
    std::map<std::string, std::size_t> ids;
    for ( const auto& [ key, state ] : graph.nodes )
        ids.emplace( key, ids.size() );

    std::ostringstream out;
    out << "digraph \"" << detail::dot_escape( name ) << "\" {\n";
    out << "  rankdir=LR;\n";
    out << "  node [shape=box, style=rounded, fontname=\"Helvetica\"];\n";
    out << "  edge [fontname=\"Helvetica\"];\n";
    for ( const auto& [ key, state ] : graph.nodes )
    {
        out << "  n" << ids.at( key ) << " [label=\"";
        if ( state.is_terminated() )
            out << "terminated\\n(" << to_string( *state.termination() ) << ")";
        else if ( state.norms().empty() )
            out << "(no norms)";
        else
        {
            bool first = true;
            for ( const auto& a : state.norms() )
            {
                out << ( first ? "" : "\\n" ) << detail::dot_escape( to_string( a ) );
                first = false;
            }
        }
        out << "\"";
        if ( state.is_terminated() )
            out << ", shape=doublecircle, color="
                << ( *state.termination() == TerminationClass::happy ? "darkgreen" : "firebrick" );
        if ( key == graph.initial )
            out << ", penwidth=2";
        out << "];\n";
    }
    for ( const auto& e : graph.edges )
    {
        out << "  n" << ids.at( e.from ) << " -> n" << ids.at( e.to ) << " [label=\""
            << detail::dot_escape( to_string( e.label ) ) << "\"";
        if ( e.label.is_violate() )
            out << ", style=dashed";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

inline wire::json export_structured_graph( const StateGraph& graph, std::string_view name = "contract" )
{
    using wire::json;
    const auto terminals = classify_terminals( graph );

    json nodes = json::array();
    for ( const auto& [ key, state ] : graph.nodes )
    {
        auto n = wire::state( state );
        n[ "initial" ] = key == graph.initial;
        nodes.push_back( std::move( n ) );
    }
    json edges = json::array();
    for ( const auto& e : graph.edges )
    {
        json edge{ { "from", e.from }, { "to", e.to }, { "label", wire::label( e.label ) } };
        edge[ "rule_order" ] = e.rule_order == std::numeric_limits<std::size_t>::max() ? json( nullptr )
                                                                                        : json( e.rule_order );
        edges.push_back( std::move( edge ) );
    }
    json term = json::object();
    for ( const auto& [ key, cls ] : terminals )
        term[ key ] = to_string( cls );

    return { { "name", std::string{ name } },
             { "initial", graph.initial },
             { "nodes", std::move( nodes ) },
             { "edges", std::move( edges ) },
             { "terminals", std::move( term ) } };
}

} // namespace pact
