#pragma once

// HTTP front end. Routing is done by hand in Service::handle so the tests can
// drive it without a socket; mount() wires it into a cpp-httplib server.

#include "export.hpp"
#include "store.hpp"

#include <httplib.h>

#include <mutex>

namespace pact
{

struct Request
{
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string idempotency_key;
};

struct Reply
{
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    static Reply json( int status, const wire::json& j ) { return { status, "application/json", j.dump() }; }
};

inline int http_status( errc code )
{
    switch ( code )
    {
    case errc::malformed:
    case errc::precondition:
        return 400;
    case errc::not_found:
        return 404;
    case errc::stale_timestamp:
    case errc::terminal_state:
    case errc::unexpected_event:
    case errc::conflict:
        return 409;
    case errc::invalid_spec:
    case errc::state_bound:
        return 422;
    case errc::corrupt_snapshot:
        return 500;
    }
    return 500;
}

class Service
{
    struct Slot
    {
        std::mutex lock;
        std::optional<StoredSession> stored;
    };

    FileStore _store;
    std::mutex _index_lock;
    std::map<std::string, std::shared_ptr<Slot>> _slots;
    std::map<std::string, wire::json> _created; // idempotency key -> POST /sessions reply

    static std::vector<std::string> segments( std::string_view path )
    {
        std::vector<std::string> out;
        std::size_t i = 0;
        while ( i < path.size() )
        {
            const auto j = path.find( '/', i );
            const auto end = j == std::string_view::npos ? path.size() : j;
            if ( end > i )
                out.emplace_back( path.substr( i, end - i ) );
            i = end + 1;
        }
        return out;
    }

    static wire::json body_json( const Request& req )
    {
        auto j = wire::json::parse( req.body, nullptr, false );
        if ( j.is_discarded() || !j.is_object() )
            throw error( errc::malformed, "request body must be a JSON object" );
        return j;
    }

    static Reply failure( errc code, std::string_view message )
    {
        return Reply::json( http_status( code ), { { "error", errc_name( code ) }, { "message", message } } );
    }

    ContractSpec load_contract( const std::string& id ) const
    {
        auto source = _store.get_contract( id );
        if ( !source )
            throw error( errc::not_found, "unknown contract '" + id + "'" );
        auto parsed = parse( *source );
        if ( !parsed.ok() )
            throw error( errc::corrupt_snapshot, "stored contract '" + id + "' no longer parses" );
        return std::move( parsed.value() );
    }

    std::shared_ptr<Slot> slot( const std::string& id )
    {
        std::lock_guard guard{ _index_lock };
        auto& s = _slots[ id ];
        if ( !s )
            s = std::make_shared<Slot>();
        return s;
    }

    // Runs `f` on the session with exclusive access. Mutations are persisted
    // before the lock is released.
    template <typename F>
    Reply with_session( const std::string& id, bool mutating, F&& f )
    {
        auto s = slot( id );
        std::lock_guard guard{ s->lock };
        if ( !s->stored )
        {
            auto loaded = _store.get_session( id );
            if ( !loaded )
                throw error( errc::not_found, "unknown session '" + id + "'" );
            s->stored = std::move( *loaded );
        }
        if ( !mutating )
            return f( *s->stored );
        StoredSession draft = *s->stored;
        Reply r = f( draft );
        _store.put_session( draft );
        s->stored = std::move( draft );
        return r;
    }

    static wire::json session_view( const StoredSession& s )
    {
        const auto& session = s.session;
        return { { "id", s.id },
                 { "contract", s.contract },
                 { "epoch", session.epoch() },
                 { "clock", session.clock() },
                 { "state", wire::state( session.state() ) },
                 { "active", wire::active_norms( session.active_norms() ) } };
    }

    // Replays a cached reply for a repeated idempotency key, else runs the
    // mutation and caches its reply (failures included).
    template <typename F>
    static Reply idempotent( StoredSession& s, const Request& req, F&& f )
    {
        const auto key = req.idempotency_key.empty() ? std::string{} : req.path + "#" + req.idempotency_key;
        if ( !key.empty() )
            if ( auto it = s.replies.find( key ); it != s.replies.end() )
                return { it->second.at( "status" ).get<int>(), "application/json", it->second.at( "body" ).get<std::string>() };
        Reply r;
        try
        {
            r = f( s );
        }
        catch ( const error& e )
        {
            r = failure( e.code(), e.what() );
        }
        if ( !key.empty() )
            s.replies[ key ] = { { "status", r.status }, { "body", r.body } };
        return r;
    }

    Reply post_contract( const Request& req )
    {
        auto parsed = parse( req.body );
        if ( !parsed.ok() )
            return Reply::json( 422, { { "diagnostics", wire::diagnostics( parsed.diagnostics() ) } } );
        const auto diags = validate( parsed.value() );
        if ( has_errors( diags ) )
            return Reply::json( 422, { { "diagnostics", wire::diagnostics( diags ) } } );
        const auto id = contract_id( parsed.value() );
        _store.put_contract( id, pretty_print( parsed.value() ) );
        return Reply::json( 201, { { "id", id }, { "name", parsed.value().name }, { "diagnostics", wire::diagnostics( diags ) } } );
    }

    Reply get_graph( const std::string& id, const Request& req )
    {
        const auto spec = load_contract( id );
        const auto graph = build_graph( spec );
        const auto format = req.query.count( "format" ) ? req.query.at( "format" ) : std::string{ "structured" };
        if ( format == "dot" )
            return { 200, "text/vnd.graphviz", export_dot( graph, spec.name ) };
        if ( format == "structured" )
            return Reply::json( 200, export_structured_graph( graph, spec.name ) );
        throw error( errc::malformed, "format must be dot or structured" );
    }

    Reply get_analysis( const std::string& id )
    {
        const auto spec = load_contract( id );
        const auto graph = build_graph( spec );
        wire::json terminals = wire::json::object();
        for ( const auto& [ key, cls ] : classify_terminals( graph ) )
            terminals[ key ] = to_string( cls );
        wire::json ctd = wire::json::array();
        for ( const auto& t : detect_ctd( graph ) )
            ctd.push_back( { { "primary", to_string( t.primary ) },
                             { "via", to_string( t.via ) },
                             { "secondary", to_string( t.secondary ) } } );
        wire::json provisions = wire::json::array();
        std::set<NormAtom> seen;
        for ( const auto& r : spec.rules )
            if ( r.guard.is_obligation() && seen.insert( r.guard ).second )
                provisions.push_back( { { "obligation", to_string( r.guard ) },
                                        { "class", to_string( classify_provision( spec, r.guard ) ) } } );
        return Reply::json( 200, { { "contract", id },
                                   { "states", graph.nodes.size() },
                                   { "edges", graph.edges.size() },
                                   { "terminals", std::move( terminals ) },
                                   { "ctd", std::move( ctd ) },
                                   { "provisions", std::move( provisions ) } } );
    }

    Reply post_session( const Request& req )
    {
        const auto body = body_json( req );
        if ( !body.contains( "contract" ) || !body[ "contract" ].is_string() )
            throw error( errc::malformed, "field 'contract' must be a string" );
        const Time epoch = body.contains( "epoch" ) ? body[ "epoch" ].get<Time>() : 0;
        if ( !req.idempotency_key.empty() )
        {
            std::lock_guard guard{ _index_lock };
            if ( auto it = _created.find( req.idempotency_key ); it != _created.end() )
                return Reply::json( 201, it->second );
        }
        const auto cid = body[ "contract" ].get<std::string>();
        auto spec = load_contract( cid );
        StoredSession s{ random_token(), cid, pretty_print( spec ), open_session( std::move( spec ), epoch ), {} };
        _store.put_session( s );
        const auto view = session_view( s );
        {
            std::lock_guard guard{ _index_lock };
            if ( !req.idempotency_key.empty() )
                _created.emplace( req.idempotency_key, view );
            _slots[ s.id ] = std::make_shared<Slot>();
            _slots[ s.id ]->stored = std::move( s );
        }
        return Reply::json( 201, view );
    }

    Reply post_events( const std::string& id, const Request& req )
    {
        const auto body = body_json( req );
        std::vector<Event> events;
        if ( body.contains( "events" ) )
        {
            if ( !body[ "events" ].is_array() )
                throw error( errc::malformed, "field 'events' must be an array" );
            for ( const auto& e : body[ "events" ] )
                events.push_back( wire::event_from( e ) );
        }
        else
            events.push_back( wire::event_from( body ) );

        return with_session( id, true, [ & ]( StoredSession& s ) {
            return idempotent( s, req, [ & ]( StoredSession& t ) {
                // all or nothing across a batch
                Session draft = t.session;
                std::vector<TransitionRecord> records;
                for ( const auto& e : events )
                {
                    auto rs = draft.feed( e );
                    records.insert( records.end(), rs.begin(), rs.end() );
                }
                t.session = std::move( draft );
                auto view = session_view( t );
                view[ "records" ] = wire::records( records );
                return Reply::json( 200, view );
            } );
        } );
    }

    Reply post_clock( const std::string& id, const Request& req )
    {
        const auto body = body_json( req );
        if ( !body.contains( "to" ) || !body[ "to" ].is_number_integer() )
            throw error( errc::malformed, "field 'to' must be an integer" );
        const Time to = body[ "to" ].get<Time>();
        return with_session( id, true, [ & ]( StoredSession& s ) {
            return idempotent( s, req, [ & ]( StoredSession& t ) {
                if ( t.session.state().is_terminated() )
                    throw error( errc::terminal_state, "the contract has terminated" );
                auto records = t.session.advance_clock( to );
                auto view = session_view( t );
                view[ "records" ] = wire::records( records );
                return Reply::json( 200, view );
            } );
        } );
    }

    Reply post_explore( const std::string& id, const Request& req )
    {
        const auto body = body_json( req );
        return with_session( id, false, [ & ]( StoredSession& s ) {
            if ( body.contains( "events" ) )
            {
                if ( !body[ "events" ].is_array() )
                    throw error( errc::malformed, "field 'events' must be an array" );
                std::vector<Event> events;
                for ( const auto& e : body[ "events" ] )
                    events.push_back( wire::event_from( e ) );
                const auto result = what_if( s.session, events );
                wire::json failures = wire::json::array();
                for ( const auto& f : result.failures )
                    failures.push_back( { { "index", f.index }, { "error", errc_name( f.code ) }, { "message", f.message } } );
                return Reply::json( 200, { { "state", wire::state( result.final_state ) },
                                           { "clock", result.clock },
                                           { "records", wire::records( result.records ) },
                                           { "failures", std::move( failures ) } } );
            }
            if ( !body.contains( "depth" ) || !body[ "depth" ].is_number_unsigned() )
                throw error( errc::malformed, "give 'depth' (non-negative integer) or 'events'" );
            const auto depth = body[ "depth" ].get<std::size_t>();
            if ( depth > 16 )
                throw error( errc::malformed, "depth is capped at 16" );
            return Reply::json( 200, { { "tree", wire::scenario( expand( s.session.spec(), s.session.state(), depth ) ) } } );
        } );
    }

public:
    explicit Service( std::filesystem::path root ) : _store{ std::move( root ) } {}

    Reply handle( const Request& req )
    {
        try
        {
            const auto seg = segments( req.path );
            const auto& m = req.method;
            const auto n = seg.size();
            if ( n == 1 && seg[ 0 ] == "health" && m == "GET" )
                return Reply::json( 200, { { "status", "ok" } } );
            if ( n >= 1 && seg[ 0 ] == "contracts" )
            {
                if ( n == 1 && m == "POST" )
                    return post_contract( req );
                if ( n == 3 && seg[ 2 ] == "graph" && m == "GET" )
                    return get_graph( seg[ 1 ], req );
                if ( n == 3 && seg[ 2 ] == "analysis" && m == "GET" )
                    return get_analysis( seg[ 1 ] );
            }
            if ( n >= 1 && seg[ 0 ] == "sessions" )
            {
                if ( n == 1 && m == "POST" )
                    return post_session( req );
                if ( n == 3 && seg[ 2 ] == "events" && m == "POST" )
                    return post_events( seg[ 1 ], req );
                if ( n == 3 && seg[ 2 ] == "clock" && m == "POST" )
                    return post_clock( seg[ 1 ], req );
                if ( n == 3 && seg[ 2 ] == "explore" && m == "POST" )
                    return post_explore( seg[ 1 ], req );
                if ( n == 3 && seg[ 2 ] == "state" && m == "GET" )
                    return with_session( seg[ 1 ], false, []( StoredSession& s ) { return Reply::json( 200, session_view( s ) ); } );
                if ( n == 3 && seg[ 2 ] == "history" && m == "GET" )
                    return with_session( seg[ 1 ], false, []( StoredSession& s ) {
                        return Reply::json( 200, { { "id", s.id }, { "records", wire::records( s.session.log() ) } } );
                    } );
            }
            return failure( errc::not_found, "no route for " + m + " " + req.path );
        }
        catch ( const error& e )
        {
            return failure( e.code(), e.what() );
        }
        catch ( const wire::json::exception& e )
        {
            return failure( errc::malformed, e.what() );
        }
    }

    void mount( httplib::Server& server )
    {
        auto bridge = [ this ]( const httplib::Request& in, httplib::Response& out ) {
            Request req{ in.method, in.path, {}, in.body, in.get_header_value( "Idempotency-Key" ) };
            for ( const auto& [ k, v ] : in.params )
                req.query[ k ] = v;
            const auto r = handle( req );
            out.status = r.status;
            out.set_content( r.body, r.content_type );
        };
        server.Get( ".*", bridge );
        server.Post( ".*", bridge );
    }
};

} // namespace pact
