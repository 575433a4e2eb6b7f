#pragma once

// What-if exploration for drafting: scenario trees, paths to target states,
// and hypothetical event sequences evaluated on a copy of a session.

#include "monitor.hpp"

#include <functional>

namespace pact
{

struct ScenarioNode
{
    ContractState state;
    std::optional<TransitionLabel> via;
    std::vector<ScenarioNode> children;
    std::optional<std::string> revisit; // key of the state already on the root path

    [[nodiscard]] std::size_t depth() const
    {
        std::size_t d = 0;
        for ( const auto& c : children )
            d = std::max( d, c.depth() + 1 );
        return d;
    }
};

namespace detail
{

inline ScenarioNode expand_from( const ContractSpec& spec, ScenarioNode node, std::size_t depth,
                                 std::vector<std::string>& path )
{
    if ( depth == 0 )
        return node;
    for ( const auto& label : enabled_transitions( spec, node.state ) )
    {
        ScenarioNode child{ successor( spec, node.state, label ), label, {}, std::nullopt };
        const auto key = canonical_key( child.state );
        if ( std::find( path.begin(), path.end(), key ) != path.end() )
        {
            child.revisit = key;
            node.children.push_back( std::move( child ) );
            continue;
        }
        path.push_back( key );
        node.children.push_back( expand_from( spec, std::move( child ), depth - 1, path ) );
        path.pop_back();
    }
    return node;
}

} // namespace detail

inline ScenarioNode expand( const ContractSpec& spec, const ContractState& state, std::size_t depth )
{
    std::vector<std::string> path{ canonical_key( state ) };
    return detail::expand_from( spec, { state, std::nullopt, {}, std::nullopt }, depth, path );
}

using LabelPath = std::vector<TransitionLabel>;

// Every simple path from the initial node to a node satisfying `target`, of
// at most `max_len` steps, ordered lexicographically by the rule order of
// their edges.
inline std::vector<LabelPath> find_paths( const StateGraph& graph, const std::function<bool( const ContractState& )>& target,
                                          std::size_t max_len )
{
    if ( max_len < 1 )
        throw error( errc::precondition, "max_len must be at least 1" );

    using EdgeKey = std::pair<std::size_t, std::string>;
    std::vector<std::pair<std::vector<EdgeKey>, LabelPath>> found;
    std::vector<std::string> visited{ graph.initial };
    std::vector<const GraphEdge*> trail;

    std::function<void( const std::string& )> walk = [ & ]( const std::string& key ) {
        if ( target( graph.nodes.at( key ) ) )
        {
            std::vector<EdgeKey> order;
            LabelPath labels;
            for ( const auto* e : trail )
            {
                order.emplace_back( e->rule_order, to_string( e->label ) );
                labels.push_back( e->label );
            }
            found.emplace_back( std::move( order ), std::move( labels ) );
        }
        if ( trail.size() == max_len )
            return;
        for ( const auto* e : graph.out_edges( key ) )
        {
            if ( std::find( visited.begin(), visited.end(), e->to ) != visited.end() )
                continue;
            visited.push_back( e->to );
            trail.push_back( e );
            walk( e->to );
            trail.pop_back();
            visited.pop_back();
        }
    };
    walk( graph.initial );

    std::stable_sort( found.begin(), found.end(),
                      []( const auto& a, const auto& b ) { return a.first < b.first; } );
    std::vector<LabelPath> out;
    for ( auto& f : found )
        out.push_back( std::move( f.second ) );
    return out;
}

struct WhatIfFailure
{
    std::size_t index;
    errc code;
    std::string message;
};

struct WhatIfResult
{
    ContractState final_state;
    Time clock = 0;
    std::vector<TransitionRecord> records;
    std::vector<WhatIfFailure> failures;
};

// Feeds the events to a copy of the session. A failing event is reported and
// skipped; the input session is never touched.
inline WhatIfResult what_if( const Session& session, std::span<const Event> events )
{
    Session draft = session;
    WhatIfResult out;
    for ( std::size_t i = 0; i < events.size(); ++i )
    {
        try
        {
            auto records = draft.feed( events[ i ] );
            out.records.insert( out.records.end(), records.begin(), records.end() );
        }
        catch ( const error& e )
        {
            out.failures.push_back( { i, e.code(), e.what() } );
        }
    }
    out.final_state = draft.state();
    out.clock = draft.clock();
    return out;
}

} // namespace pact
