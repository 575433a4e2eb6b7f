// pact: command line front end (check, graph, analyze, simulate, serve).

#include <pact/service.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace
{

std::optional<std::string> slurp( const std::string& path )
{
    std::ifstream in{ path, std::ios::binary };
    if ( !in )
        return std::nullopt;
    return std::string{ std::istreambuf_iterator<char>{ in }, {} };
}

// Parses and validates; prints diagnostics to stderr. Empty on any error.
std::optional<pact::ContractSpec> load( const std::string& path )
{
    auto source = slurp( path );
    if ( !source )
    {
        std::cerr << path << ": cannot read file\n";
        return std::nullopt;
    }
    auto parsed = pact::parse( *source );
    if ( !parsed.ok() )
    {
        for ( const auto& d : parsed.diagnostics() )
            std::cerr << path << ":" << pact::to_string( d ) << "\n";
        return std::nullopt;
    }
    const auto diags = pact::validate( parsed.value() );
    for ( const auto& d : diags )
        std::cerr << path << ":" << pact::to_string( d ) << "\n";
    if ( pact::has_errors( diags ) )
        return std::nullopt;
    return std::move( parsed.value() );
}

std::string describe( const pact::ContractSpec& spec, const pact::NormAtom& atom )
{
    std::string out = pact::to_string( atom );
    if ( !atom.is_obligation() )
        return out;
    if ( const auto* p = spec.find_proposition( atom.as_obligation().proposition ) )
    {
        if ( !p->display.empty() )
            out += "  \"" + p->display + "\"";
        if ( !p->attrs.empty() )
        {
            out += "  attrs{";
            bool first = true;
            for ( const auto& [ k, v ] : p->attrs )
            {
                out += ( first ? "" : ", " ) + k + "=";
                if ( const auto* s = std::get_if<std::string>( &v ) )
                    out += "\"" + *s + "\"";
                else
                    out += std::get<pact::Decimal>( v ).to_string();
                first = false;
            }
            out += "}";
        }
    }
    return out;
}

int run_graph( const std::string& file, bool structured )
{
    auto spec = load( file );
    if ( !spec )
        return 1;
    try
    {
        const auto graph = pact::build_graph( *spec );
        if ( structured )
            std::cout << pact::export_structured_graph( graph, spec->name ).dump( 2 ) << "\n";
        else
            std::cout << pact::export_dot( graph, spec->name );
    }
    catch ( const pact::error& e )
    {
        std::cerr << file << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_analyze( const std::string& file )
{
    auto spec = load( file );
    if ( !spec )
        return 1;
    try
    {
        const auto graph = pact::build_graph( *spec );
        std::cout << "contract " << spec->name << ": " << graph.nodes.size() << " states, " << graph.edges.size()
                  << " transitions\n";
        std::cout << "terminals:\n";
        for ( const auto& [ key, cls ] : pact::classify_terminals( graph ) )
            std::cout << "  " << key << "  " << pact::to_string( cls ) << "\n";
        const auto ctd = pact::detect_ctd( graph );
        std::cout << "contrary-to-duty triples: " << ctd.size() << "\n";
        for ( const auto& t : ctd )
            std::cout << "  " << pact::to_string( t.primary ) << "  --[" << pact::to_string( t.via ) << "]-->  "
                      << pact::to_string( t.secondary ) << "\n";
        std::cout << "provisions:\n";
        std::set<pact::NormAtom> seen;
        for ( const auto& r : spec->rules )
            if ( r.guard.is_obligation() && seen.insert( r.guard ).second )
                std::cout << "  " << pact::to_string( r.guard ) << "  "
                          << pact::to_string( pact::classify_provision( *spec, r.guard ) ) << "\n";
    }
    catch ( const pact::error& e )
    {
        std::cerr << file << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_simulate( const std::string& file, const std::string& events_file, pact::Time epoch )
{
    auto spec = load( file );
    if ( !spec )
        return 1;
    auto text = slurp( events_file );
    if ( !text )
    {
        std::cerr << events_file << ": cannot read file\n";
        return 1;
    }
    auto events = pact::parse_events( *text );
    if ( !events.ok() )
    {
        for ( const auto& d : events.diagnostics() )
            std::cerr << events_file << ":" << pact::to_string( d ) << "\n";
        return 1;
    }

    auto session = pact::open_session( *spec, epoch );
    int rejected = 0;
    for ( const auto& e : events.value() )
    {
        try
        {
            for ( const auto& r : session.feed( e ) )
            {
                std::cout << "t=" << r.at << "  " << pact::to_string( r.label ) << ( r.is_lapse() ? "  (lapse)" : "" )
                          << "\n    " << r.before_key << " -> " << r.after_key << "\n";
                for ( const auto& a : r.activated )
                    std::cout << "    + " << pact::to_string( a ) << "\n";
                for ( const auto& a : r.discharged )
                    std::cout << "    - " << pact::to_string( a ) << "\n";
            }
        }
        catch ( const pact::error& err )
        {
            ++rejected;
            std::cout << "rejected " << pact::to_event_line( e ) << ": " << pact::errc_name( err.code() ) << ": "
                      << err.what() << "\n";
        }
    }

    std::cout << "clock t=" << session.clock() << "\n";
    if ( session.state().is_terminated() )
        std::cout << "final: " << pact::canonical_key( session.state() ) << "\n";
    else
    {
        std::cout << "final norms:\n";
        for ( const auto& n : session.active_norms() )
        {
            std::cout << "  " << describe( *spec, n.atom );
            if ( n.deadline )
                std::cout << "  due t<=" << *n.deadline;
            std::cout << "\n";
        }
    }
    return rejected ? 1 : 0;
}

int run_serve( const std::string& host, int port, const std::string& store )
{
    pact::Service service{ store };
    httplib::Server server;
    service.mount( server );
    std::cerr << "listening on " << host << ":" << port << " (store " << store << ")\n";
    if ( !server.listen( host, port ) )
    {
        std::cerr << "cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main( int argc, char** argv )
{
    CLI::App app{ "pact: draft, analyse and monitor normative contracts" };
    app.require_subcommand( 1 );

    std::string file, events_file, host = "127.0.0.1", store = "pact-store";
    bool dot = false, structured = false;
    pact::Time epoch = 0;
    int port = 8080;

    auto* check = app.add_subcommand( "check", "parse and validate a .pact file" );
    check->add_option( "file", file )->required();

    auto* graph = app.add_subcommand( "graph", "print the state graph" );
    graph->add_option( "file", file )->required();
    auto* dot_flag = graph->add_flag( "--dot", dot, "Graphviz DOT (default)" );
    graph->add_flag( "--structured", structured, "structured JSON" )->excludes( dot_flag );

    auto* analyze = app.add_subcommand( "analyze", "terminals, contrary-to-duty triples, provision classes" );
    analyze->add_option( "file", file )->required();

    auto* simulate = app.add_subcommand( "simulate", "replay an event file against a contract" );
    simulate->add_option( "file", file )->required();
    simulate->add_option( "--events", events_file )->required();
    simulate->add_option( "--epoch", epoch )->capture_default_str();

    auto* serve = app.add_subcommand( "serve", "run the HTTP service" );
    serve->add_option( "--port", port )->capture_default_str();
    serve->add_option( "--host", host )->capture_default_str();
    serve->add_option( "--store", store, "session store directory" )->capture_default_str();

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::CallForHelp& e )
    {
        return app.exit( e );
    }
    catch ( const CLI::ParseError& e )
    {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    if ( check->parsed() )
        return load( file ) ? 0 : 1;
    if ( graph->parsed() )
        return run_graph( file, structured );
    if ( analyze->parsed() )
        return run_analyze( file );
    if ( simulate->parsed() )
        return run_simulate( file, events_file, epoch );
    return run_serve( host, port, store );
}
