#include "support/fixtures.hpp"
#include "support/random_spec.hpp"

#include <gtest/gtest.h>

using namespace pact;
using namespace pact_test;

namespace
{

bool mentions( const std::vector<Diagnostic>& ds, Severity sev, std::string_view text )
{
    return std::any_of( ds.begin(), ds.end(), [ & ]( const Diagnostic& d ) {
        return d.severity == sev && d.message.find( text ) != std::string::npos;
    } );
}

const char* minimal = "contract c\n"
                      "agents s, p\n"
                      "proposition alpha by s\n"
                      "proposition beta by p\n"
                      "initially O(s, alpha)\n";

} // namespace

TEST( Parse, PizzaSimple )
{
    const auto spec = load_bundled( "pizza_simple" );
    EXPECT_EQ( spec.name, "pizza_simple" );
    EXPECT_EQ( spec.agents, ( std::vector<AgentId>{ "s", "p" } ) );
    ASSERT_EQ( spec.rules.size(), 6u );
    ASSERT_EQ( spec.initial.size(), 1u );
    EXPECT_EQ( spec.initial[ 0 ], NormAtom::obligation( "s", "alpha" ) );

    std::vector<std::string> labels;
    for ( const auto& r : spec.rules )
        labels.push_back( to_string( r.label ) );
    EXPECT_EQ( labels, ( std::vector<std::string>{ "s: alpha", "not s: alpha", "s: phi", "not s: phi", "p: beta", "not p: beta" } ) );

    const auto& breach = spec.rules[ 1 ];
    ASSERT_EQ( breach.consequents.size(), 2u );
    EXPECT_EQ( std::get<Remove>( breach.consequents[ 0 ] ).atom, NormAtom::obligation( "p", "beta" ) );
    EXPECT_EQ( std::get<Add>( breach.consequents[ 1 ] ).atom, NormAtom::obligation( "s", "phi" ) );
    EXPECT_EQ( spec.rules[ 4 ].terminates(), TerminationClass::happy );
}

TEST( Parse, EmptyText )
{
    const auto r = parse( "" );
    ASSERT_FALSE( r.ok() );
    EXPECT_TRUE( mentions( r.diagnostics(), Severity::error, "no contract declaration" ) );
}

TEST( Parse, UndeclaredAgentHasSpan )
{
    const std::string src = std::string{ minimal } + "rule r: O(s, alpha) -[ q: alpha ]-> O(p, beta)\n";
    const auto r = parse( src );
    ASSERT_FALSE( r.ok() );
    const auto& d = r.diagnostics().front();
    EXPECT_NE( d.message.find( "'q'" ), std::string::npos ) << d.message;
    EXPECT_EQ( d.span.line, 6 );
    // columns are 1-based and inclusive
    const std::string line = "rule r: O(s, alpha) -[ q: alpha ]-> O(p, beta)";
    EXPECT_EQ( line.substr( static_cast<std::size_t>( d.span.col_start - 1 ),
                            static_cast<std::size_t>( d.span.col_end - d.span.col_start + 1 ) ),
               "q" );
}

TEST( Parse, SyntaxErrorsAreCollectedPerLine )
{
    const auto r = parse( "contract c\nagents s\nproposition alpha by\nrule : nonsense\n" );
    ASSERT_FALSE( r.ok() );
    EXPECT_GE( r.diagnostics().size(), 2u );
    for ( const auto& d : r.diagnostics() )
        EXPECT_EQ( d.severity, Severity::error );
}

TEST( Parse, KeywordsAreNotNames )
{
    EXPECT_FALSE( parse( "contract rule\n" ).ok() );
    EXPECT_FALSE( parse( "contract c\nagents s, O\n" ).ok() );
}

TEST( Parse, AttributesAndOptions )
{
    const auto r = parse( "contract c\n"
                          "agents s, p\n"
                          "option frame_policy = persist\n"
                          "option violation_axiom = off\n"
                          "option state_bound = 50\n"
                          "proposition beta \"pay\" by p attrs{amount=13.95, currency=\"GBP\"}\n"
                          "initially O(p, beta)\n"
                          "rule pay: O(p, beta) -[ p: beta @between(10, 20) ]-> terminated happy\n" );
    ASSERT_TRUE( r.ok() ) << to_string( r.diagnostics().front() );
    const auto& spec = r.value();
    EXPECT_EQ( spec.config.frame_policy, FramePolicy::persist_unmentioned );
    EXPECT_FALSE( spec.config.violation_axiom );
    EXPECT_EQ( spec.config.state_bound, 50u );
    const auto* beta = spec.find_proposition( "beta" );
    ASSERT_NE( beta, nullptr );
    EXPECT_EQ( std::get<Decimal>( beta->attrs.at( "amount" ) ), *Decimal::parse( "13.95" ) );
    EXPECT_EQ( std::get<std::string>( beta->attrs.at( "currency" ) ), "GBP" );
    EXPECT_EQ( spec.rules[ 0 ].label.qualifier, TemporalQualifier::between( 10, 20 ) );
}

TEST( Validate, BundledSpecsHaveNoErrors )
{
    for ( const auto& name : bundled )
        EXPECT_FALSE( has_errors( validate( load_bundled( name ) ) ) ) << name;
    EXPECT_TRUE( validate( load_bundled( "pizza_simple" ) ).empty() );
}

TEST( Validate, EmptyInterval )
{
    const auto r = parse( std::string{ minimal } + "rule r: O(s, alpha) -[ s: alpha @between(30, 10) ]-> O(p, beta)\n" );
    ASSERT_TRUE( r.ok() );
    EXPECT_TRUE( mentions( validate( r.value() ), Severity::error, "empty interval" ) );
}

TEST( Validate, UnusedPropositionWarns )
{
    const auto r = parse( std::string{ minimal } + "proposition gamma by s\n" +
                          "rule r: O(s, alpha) -[ s: alpha ]-> O(p, beta)\n" );
    ASSERT_TRUE( r.ok() );
    const auto ds = validate( r.value() );
    EXPECT_FALSE( has_errors( ds ) );
    EXPECT_TRUE( mentions( ds, Severity::warning, "'gamma'" ) );
}

TEST( Validate, ConflictingTerminationOnSameGuardAndLabel )
{
    const auto r = parse( std::string{ minimal } + "rule a: O(s, alpha) -[ s: alpha ]-> terminated happy\n" +
                          "rule b: O(s, alpha) -[ s: alpha ]-> terminated unhappy\n" );
    ASSERT_TRUE( r.ok() );
    EXPECT_TRUE( mentions( validate( r.value() ), Severity::error, "conflicting classes" ) );
}

TEST( Validate, TerminatedMustBeSole )
{
    // caught by the parser already
    const auto r = parse( std::string{ minimal } + "rule a: O(s, alpha) -[ s: alpha ]-> terminated happy, O(p, beta)\n" );
    ASSERT_FALSE( r.ok() );
    EXPECT_TRUE( mentions( r.diagnostics(), Severity::error, "sole consequent" ) );

    // and by validate for specs built in code
    auto spec = parse( std::string{ minimal } + "rule a: O(s, alpha) -[ s: alpha ]-> terminated happy\n" ).value();
    spec.rules[ 0 ].consequents.push_back( Add{ NormAtom::obligation( "p", "beta" ) } );
    EXPECT_TRUE( mentions( validate( spec ), Severity::error, "sole consequent" ) );
}

TEST( Validate, ExerciseMustNotContradictGrant )
{
    const auto r = parse( std::string{ minimal } +
                          "rule a: POW(p, O(s, alpha)) -[ exercise p: O(s, alpha) ]-> not O(s, alpha)\n" );
    ASSERT_TRUE( r.ok() );
    EXPECT_TRUE( has_errors( validate( r.value() ) ) );
}

TEST( PrettyPrint, RoundTripBundled )
{
    for ( const auto& name : bundled )
    {
        const auto spec = load_bundled( name );
        const auto again = parse( pretty_print( spec ) );
        ASSERT_TRUE( again.ok() ) << name;
        EXPECT_EQ( again.value(), spec ) << name;
    }
    for ( const auto& name : { "pizza_types_any", "pizza_intermediate" } )
    {
        const auto spec = load_data( name );
        EXPECT_EQ( parse( pretty_print( spec ) ).value(), spec ) << name;
    }
}

TEST( PrettyPrint, PreservesRuleOrderAndQualifiers )
{
    const auto spec = load_bundled( "pizza_timed" );
    const auto text = pretty_print( spec );
    std::size_t last = 0;
    for ( const auto& r : spec.rules )
    {
        const auto at = text.find( "rule " + r.id + ":" );
        ASSERT_NE( at, std::string::npos ) << r.id;
        EXPECT_GT( at, last );
        last = at;
    }
    EXPECT_NE( text.find( "@before(30)" ), std::string::npos );
    // idempotent on its own output
    EXPECT_EQ( pretty_print( parse( text ).value() ), text );
}

TEST( PrettyPrint, RoundTripGenerated )
{
    SpecGenerator gen{ 20261016 };
    for ( int i = 0; i < 100; ++i )
    {
        const auto spec = gen.next();
        const auto text = pretty_print( spec );
        const auto again = parse( text );
        ASSERT_TRUE( again.ok() ) << text << "\n" << to_string( again.diagnostics().front() );
        EXPECT_EQ( again.value(), spec ) << text;
    }
}

// Any input, however mangled, gives either a spec or error diagnostics with
// spans inside the text.
TEST( Parse, TotalOnMangledInput )
{
    std::mt19937_64 rng{ 7 };
    const std::string base = read_file( contract_path( "pizza_timed.pact" ) );
    const std::string alphabet = "abcOPW(),:;-[]>@/{}=\"#0123456789. \n\tnotterminatedhappy";
    for ( int i = 0; i < 2000; ++i )
    {
        std::string text = base;
        const int edits = 1 + static_cast<int>( rng() % 8 );
        for ( int e = 0; e < edits; ++e )
        {
            const auto pos = rng() % ( text.size() + 1 );
            switch ( rng() % 3 )
            {
            case 0:
                text.insert( pos, 1, alphabet[ rng() % alphabet.size() ] );
                break;
            case 1:
                if ( pos < text.size() )
                    text.erase( pos, 1 + rng() % 6 );
                break;
            default:
                if ( pos < text.size() )
                    text[ pos ] = static_cast<char>( rng() % 256 );
            }
        }
        const auto lines = 1 + std::count( text.begin(), text.end(), '\n' );
        const auto r = parse( text );
        if ( r.ok() )
            continue;
        ASSERT_FALSE( r.diagnostics().empty() );
        for ( const auto& d : r.diagnostics() )
        {
            EXPECT_EQ( d.severity, Severity::error );
            EXPECT_GE( d.span.line, 1 );
            EXPECT_LE( d.span.line, lines );
            EXPECT_LE( d.span.col_start, d.span.col_end );
        }
    }
}

TEST( Events, ParseBundled )
{
    const auto late = load_events( "late" );
    ASSERT_EQ( late.size(), 1u );
    EXPECT_EQ( late[ 0 ].at, 45 );
    EXPECT_EQ( late[ 0 ].actor, "s" );
    EXPECT_EQ( *late[ 0 ].proposition(), "alpha" );
    EXPECT_EQ( std::get<std::string>( late[ 0 ].attrs.at( "onions" ) ), "none" );

    const auto no_show = load_events( "no_show" );
    ASSERT_EQ( no_show.size(), 1u );
    EXPECT_TRUE( no_show[ 0 ].is_tick() );
    EXPECT_EQ( no_show[ 0 ].at, 31 );
}

TEST( Events, LineRoundTrip )
{
    for ( const auto& name : { "late", "on_time", "no_show" } )
        for ( const auto& e : load_events( name ) )
        {
            const auto again = parse_event_line( to_event_line( e ) );
            ASSERT_TRUE( again.ok() ) << to_event_line( e );
            EXPECT_EQ( again.value(), e );
        }
    const auto ex = parse_event_line( "t=12 agent=p act=exercise(O(s, phi))" );
    ASSERT_TRUE( ex.ok() );
    ASSERT_NE( ex.value().grant(), nullptr );
    EXPECT_EQ( parse_event_line( to_event_line( ex.value() ) ).value(), ex.value() );
}

TEST( Events, Malformed )
{
    EXPECT_FALSE( parse_event_line( "t=abc tick" ).ok() );
    EXPECT_FALSE( parse_event_line( "agent=s act=alpha" ).ok() );
    EXPECT_FALSE( parse_events( "t=1 tick\nt=2 agent=s act=\n" ).ok() );
}
