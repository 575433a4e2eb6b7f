#pragma once

// Session snapshots and the file-backed store behind the service.
//
// A snapshot is a versioned JSON document holding the contract source and
// the transition log; the state is never stored, it is rebuilt by replaying
// the log on load, and any record whose keys disagree with the replay makes
// the snapshot corrupt.

#include "wire.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

namespace pact
{

inline constexpr int snapshot_version = 1;

// Content hash of the normalized (pretty-printed) spec.
inline std::string contract_id( const ContractSpec& spec )
{
    const auto text = pretty_print( spec );
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if ( EVP_Digest( text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr ) != 1 )
        throw error( errc::conflict, "sha256 failed" );
    static const char hex[] = "0123456789abcdef";
    std::string out;
    for ( unsigned int i = 0; i < 8 && i < len; ++i )
    {
        out += hex[ digest[ i ] >> 4 ];
        out += hex[ digest[ i ] & 0xf ];
    }
    return out;
}

inline std::string random_token()
{
    static thread_local std::mt19937_64 rng{ std::random_device{}() ^
                                             static_cast<std::uint64_t>(
                                                 std::hash<std::thread::id>{}( std::this_thread::get_id() ) ) };
    static const char hex[] = "0123456789abcdef";
    std::string out;
    for ( int i = 0; i < 2; ++i )
    {
        auto v = rng();
        for ( int j = 0; j < 16; ++j, v >>= 4 )
            out += hex[ v & 0xf ];
    }
    return out;
}

struct StoredSession
{
    std::string id;
    std::string contract;
    std::string spec_source;
    Session session;
    std::map<std::string, wire::json> replies; // idempotency key -> cached reply
};

inline wire::json save_session( const StoredSession& s )
{
    using wire::json;
    json log = json::array();
    for ( const auto& r : s.session.log() )
        log.push_back( { { "at", r.at },
                         { "event", r.event ? wire::event( *r.event ) : json( nullptr ) },
                         { "label", to_string( r.label ) },
                         { "before", r.before_key },
                         { "after", r.after_key } } );
    json replies = json::object();
    for ( const auto& [ k, v ] : s.replies )
        replies[ k ] = v;
    return { { "format", "pact-session" },
             { "version", snapshot_version },
             { "id", s.id },
             { "contract", s.contract },
             { "spec_source", s.spec_source },
             { "epoch", s.session.epoch() },
             { "clock", s.session.clock() },
             { "log", std::move( log ) },
             { "replies", std::move( replies ) } };
}

inline StoredSession load_session( const wire::json& j )
{
    auto corrupt = []( const std::string& why ) { return error( errc::corrupt_snapshot, "corrupt snapshot: " + why ); };
    try
    {
        if ( !j.is_object() || j.value( "format", "" ) != "pact-session" )
            throw corrupt( "not a session snapshot" );
        if ( j.value( "version", 0 ) != snapshot_version )
            throw corrupt( "unsupported version" );

        const auto source = j.at( "spec_source" ).get<std::string>();
        auto parsed = parse( source );
        if ( !parsed.ok() )
            throw corrupt( "contract source does not parse: " + parsed.diagnostics().front().message );
        auto spec = std::make_shared<const ContractSpec>( std::move( parsed.value() ) );
        const Time epoch = j.at( "epoch" ).get<Time>();
        const Time clock = j.at( "clock" ).get<Time>();

        std::vector<TransitionRecord> log;
        ContractState state = initial_state( *spec );
        for ( const auto& entry : j.at( "log" ) )
        {
            auto label = parse_label( entry.at( "label" ).get<std::string>() );
            if ( !label.ok() )
                throw corrupt( "bad label '" + entry.at( "label" ).get<std::string>() + "'" );
            std::optional<Event> event;
            if ( !entry.at( "event" ).is_null() )
                event = wire::event_from( entry.at( "event" ) );
            if ( !admits( *spec, state, label.value() ) )
                throw corrupt( "log step '" + to_string( label.value() ) + "' is not enabled" );
            auto next = successor( *spec, state, label.value() );
            auto record = make_record( entry.at( "at" ).get<Time>(), std::move( event ), label.value(), state, next );
            if ( record.before_key != entry.at( "before" ).get<std::string>() ||
                 record.after_key != entry.at( "after" ).get<std::string>() )
                throw corrupt( "log keys disagree with replay at t=" + std::to_string( record.at ) );
            log.push_back( std::move( record ) );
            state = std::move( next );
        }

        StoredSession out{ j.at( "id" ).get<std::string>(), j.value( "contract", contract_id( *spec ) ), source,
                           Session::restore( spec, epoch, clock, std::move( log ) ), {} };
        for ( const auto& [ k, v ] : j.value( "replies", wire::json::object() ).items() )
            out.replies.emplace( k, v );
        return out;
    }
    catch ( const wire::json::exception& e )
    {
        throw corrupt( e.what() );
    }
    catch ( const error& e )
    {
        if ( e.code() == errc::corrupt_snapshot )
            throw;
        throw corrupt( e.what() );
    }
}

// One snapshot file per session plus one source file per contract.
class FileStore
{
    std::filesystem::path _root;

    static void write_atomically( const std::filesystem::path& target, const std::string& text )
    {
        auto tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out{ tmp, std::ios::binary | std::ios::trunc };
            out << text;
            if ( !out )
                throw error( errc::conflict, "cannot write " + tmp.string() );
        }
        std::filesystem::rename( tmp, target );
    }

    static std::optional<std::string> read( const std::filesystem::path& p )
    {
        std::ifstream in{ p, std::ios::binary };
        if ( !in )
            return std::nullopt;
        return std::string{ std::istreambuf_iterator<char>{ in }, {} };
    }

    static bool safe_id( std::string_view id )
    {
        return !id.empty() && id.size() <= 64 &&
               std::all_of( id.begin(), id.end(), []( char c ) { return std::isalnum( static_cast<unsigned char>( c ) ); } );
    }

public:
    explicit FileStore( std::filesystem::path root ) : _root{ std::move( root ) }
    {
        std::filesystem::create_directories( _root / "sessions" );
        std::filesystem::create_directories( _root / "contracts" );
    }

    [[nodiscard]] const std::filesystem::path& root() const { return _root; }

    void put_contract( const std::string& id, const std::string& source )
    {
        write_atomically( _root / "contracts" / ( id + ".pact" ), source );
    }

    [[nodiscard]] std::optional<std::string> get_contract( const std::string& id ) const
    {
        if ( !safe_id( id ) )
            return std::nullopt;
        return read( _root / "contracts" / ( id + ".pact" ) );
    }

    void put_session( const StoredSession& s )
    {
        write_atomically( _root / "sessions" / ( s.id + ".json" ), save_session( s ).dump( 2 ) );
    }

    [[nodiscard]] std::optional<StoredSession> get_session( const std::string& id ) const
    {
        if ( !safe_id( id ) )
            return std::nullopt;
        auto text = read( _root / "sessions" / ( id + ".json" ) );
        if ( !text )
            return std::nullopt;
        auto j = wire::json::parse( *text, nullptr, false );
        if ( j.is_discarded() )
            throw error( errc::corrupt_snapshot, "corrupt snapshot: not JSON" );
        return load_session( j );
    }
};

} // namespace pact
