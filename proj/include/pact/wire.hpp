#pragma once

// JSON wire format shared by the HTTP service, the CLI's structured output and
// session snapshots. Field names are documented in docs/wire-format.md.

#include "explorer.hpp"
#include "language.hpp"

#include <json.hpp>

namespace pact::wire
{

using json = nlohmann::json;

inline json attr_value( const AttrValue& v )
{
    if ( const auto* s = std::get_if<std::string>( &v ) )
        return *s;
    return json::parse( std::get<Decimal>( v ).to_string() );
}

inline json attrs( const Attrs& a )
{
    json out = json::object();
    for ( const auto& [ k, v ] : a )
        out[ k ] = attr_value( v );
    return out;
}

inline Attrs attrs_from( const json& j )
{
    if ( !j.is_object() )
        throw error( errc::malformed, "attrs must be an object" );
    Attrs out;
    for ( const auto& [ k, v ] : j.items() )
    {
        if ( v.is_string() )
            out.emplace( k, v.get<std::string>() );
        else if ( v.is_number() )
        {
            auto d = Decimal::parse( v.dump() );
            if ( !d )
                throw error( errc::malformed, "attribute '" + k + "' is not a plain decimal" );
            out.emplace( k, *d );
        }
        else
            throw error( errc::malformed, "attribute '" + k + "' must be a string or a number" );
    }
    return out;
}

inline json atom( const NormAtom& a )
{
    json out{ { "text", to_string( a ) }, { "bearer", a.bearer() } };
    if ( a.is_obligation() )
    {
        out[ "modality" ] = "obligation";
        out[ "proposition" ] = a.as_obligation().proposition;
    }
    else
    {
        out[ "modality" ] = "power";
        out[ "grant" ] = to_string( a.as_power().grant );
    }
    return out;
}

inline json label( const TransitionLabel& l )
{
    json out{ { "text", to_string( l ) }, { "agent", l.agent() } };
    if ( const auto* f = std::get_if<Fulfil>( &l.kind ) )
    {
        out[ "kind" ] = "fulfil";
        out[ "proposition" ] = f->proposition;
    }
    else if ( const auto* v = std::get_if<Violate>( &l.kind ) )
    {
        out[ "kind" ] = "violate";
        out[ "proposition" ] = v->proposition;
        out[ "refinement" ] = v->refinement ? json( to_string( *v->refinement ) ) : json( nullptr );
    }
    else
    {
        out[ "kind" ] = "exercise";
        out[ "grant" ] = to_string( std::get<Exercise>( l.kind ).grant );
    }
    out[ "qualifier" ] = l.qualifier.is_none() ? json( nullptr ) : json( to_string( l.qualifier ) );
    return out;
}

inline json state( const ContractState& s )
{
    json out{ { "key", canonical_key( s ) } };
    json norms = json::array();
    for ( const auto& a : s.norms() )
        norms.push_back( atom( a ) );
    out[ "norms" ] = std::move( norms );
    if ( s.is_terminated() )
    {
        out[ "status" ] = "terminated";
        out[ "class" ] = to_string( *s.termination() );
    }
    else
    {
        out[ "status" ] = "active";
        out[ "class" ] = nullptr;
    }
    return out;
}

inline json event( const Event& e )
{
    json out{ { "t", e.at } };
    if ( e.is_tick() )
    {
        out[ "tick" ] = true;
        return out;
    }
    out[ "agent" ] = e.actor;
    if ( const auto* g = e.grant() )
        out[ "exercise" ] = to_string( *g );
    else
    {
        out[ "act" ] = *e.proposition();
        out[ "attrs" ] = attrs( e.attrs );
    }
    return out;
}

inline Event event_from( const json& j )
{
    if ( !j.is_object() )
        throw error( errc::malformed, "an event must be an object" );
    if ( !j.contains( "t" ) || !j[ "t" ].is_number_integer() )
        throw error( errc::malformed, "event field 't' must be an integer" );
    const Time at = j[ "t" ].get<Time>();
    if ( at < 0 )
        throw error( errc::malformed, "event time must be non-negative" );
    if ( j.value( "tick", false ) )
        return Event::tick( at );
    if ( !j.contains( "agent" ) || !j[ "agent" ].is_string() )
        throw error( errc::malformed, "event field 'agent' must be a string" );
    const auto agent = j[ "agent" ].get<std::string>();
    if ( j.contains( "exercise" ) )
    {
        if ( !j[ "exercise" ].is_string() )
            throw error( errc::malformed, "event field 'exercise' must be a string" );
        auto g = parse_grant( j[ "exercise" ].get<std::string>() );
        if ( !g.ok() )
            throw error( errc::malformed, "bad power grant: " + g.diagnostics().front().message );
        return Event::exercise( at, agent, g.value() );
    }
    if ( !j.contains( "act" ) || !j[ "act" ].is_string() )
        throw error( errc::malformed, "event field 'act' must be a string" );
    return Event::perform( at, agent, j[ "act" ].get<std::string>(), attrs_from( j.value( "attrs", json::object() ) ) );
}

inline json record( const TransitionRecord& r )
{
    json activated = json::array();
    json discharged = json::array();
    for ( const auto& a : r.activated )
        activated.push_back( to_string( a ) );
    for ( const auto& a : r.discharged )
        discharged.push_back( to_string( a ) );
    return { { "at", r.at },
             { "lapse", r.is_lapse() },
             { "event", r.event ? event( *r.event ) : json( nullptr ) },
             { "label", label( r.label ) },
             { "before", r.before_key },
             { "after", r.after_key },
             { "activated", std::move( activated ) },
             { "discharged", std::move( discharged ) } };
}

inline json records( std::span<const TransitionRecord> rs )
{
    json out = json::array();
    for ( const auto& r : rs )
        out.push_back( record( r ) );
    return out;
}

inline json active_norms( const std::vector<ActiveNorm>& ns )
{
    json out = json::array();
    for ( const auto& n : ns )
        out.push_back( { { "norm", atom( n.atom ) }, { "deadline", n.deadline ? json( *n.deadline ) : json( nullptr ) } } );
    return out;
}

inline json diagnostics( const std::vector<Diagnostic>& ds )
{
    json out = json::array();
    for ( const auto& d : ds )
        out.push_back( { { "severity", d.severity == Severity::error ? "error" : "warning" },
                         { "message", d.message },
                         { "line", d.span.line },
                         { "col_start", d.span.col_start },
                         { "col_end", d.span.col_end } } );
    return out;
}

inline json scenario( const ScenarioNode& n )
{
    json children = json::array();
    for ( const auto& c : n.children )
        children.push_back( scenario( c ) );
    return { { "state", state( n.state ) },
             { "via", n.via ? label( *n.via ) : json( nullptr ) },
             { "revisit", n.revisit ? json( *n.revisit ) : json( nullptr ) },
             { "children", std::move( children ) } };
}

} // namespace pact::wire
