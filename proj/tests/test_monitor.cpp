#include "support/fixtures.hpp"

#include <pact/monitor.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace pact;
using namespace pact_test;

namespace
{

const NormAtom s_alpha = NormAtom::obligation( "s", "alpha" );

Attrs right_pizza()
{
    return { { "desc", std::string{ "good-earth-vegetarian" } },
             { "onions", std::string{ "none" } },
             { "qty", std::string{ "1" } },
             { "size", std::string{ "large" } } };
}

Attrs wrong_pizza()
{
    auto a = right_pizza();
    a[ "onions" ] = std::string{ "extra" };
    return a;
}

Session timed( Time epoch = 0 ) { return open_session( load_bundled( "pizza_timed" ), epoch ); }

errc code_of( auto&& f )
{
    try
    {
        f();
    }
    catch ( const error& e )
    {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return errc::malformed;
}

std::string amount_of( const ContractSpec& spec, const NormAtom& atom )
{
    const auto* p = spec.find_proposition( atom.as_obligation().proposition );
    return std::get<Decimal>( p->attrs.at( "amount" ) ).to_string( 2 );
}

} // namespace

TEST( OpenSession, Examples )
{
    const auto s = timed();
    EXPECT_EQ( s.state(), ContractState::active( { s_alpha } ) );
    EXPECT_EQ( s.clock(), 0 );
    EXPECT_EQ( open_session( load_bundled( "pizza_simple" ), 5 ).clock(), 5 );

    auto bad = load_bundled( "pizza_simple" );
    bad.rules[ 0 ].label.qualifier = TemporalQualifier::between( 30, 10 );
    EXPECT_EQ( code_of( [ & ] { (void)open_session( bad, 0 ); } ), errc::invalid_spec );
}

TEST( ClassifyEvent, Examples )
{
    const auto spec = load_bundled( "pizza_timed" );
    const auto window = TemporalQualifier::before( 30 );
    EXPECT_EQ( classify_event( spec, Event::perform( 20, "s", "alpha", right_pizza() ), s_alpha, window ),
               TransitionLabel::fulfil( "s", "alpha", window ) );
    EXPECT_EQ( classify_event( spec, Event::perform( 45, "s", "alpha", right_pizza() ), s_alpha, window ),
               TransitionLabel::violate( "s", "alpha", ViolationRefinement{ false, true, false, false } ) );
    EXPECT_EQ( classify_event( spec, Event::perform( 45, "s", "alpha", wrong_pizza() ), s_alpha, window ),
               TransitionLabel::violate( "s", "alpha", ViolationRefinement{ true, true, false, false } ) );
    EXPECT_FALSE( classify_event( spec, Event::perform( 20, "p", "beta", {} ), s_alpha, window ) );
}

// conforming x timely x right performer, against a label computed straight
// from the three booleans
TEST( ClassifyEvent, GridMatchesOracle )
{
    const auto spec = load_bundled( "pizza_timed" );
    const auto window = TemporalQualifier::before( 30 );
    std::set<std::string> classes;
    for ( int mask = 0; mask < 8; ++mask )
    {
        const bool conforming = mask & 1, timely = mask & 2, right = mask & 4;
        const Event e = Event::perform( timely ? 20 : 45, right ? "s" : "p", "alpha", conforming ? right_pizza() : wrong_pizza() );

        const TransitionLabel expected =
            conforming && timely && right
                ? TransitionLabel::fulfil( "s", "alpha", window )
                : TransitionLabel::violate( "s", "alpha", ViolationRefinement{ !conforming, !timely, !right, false } );
        const auto got = classify_event( spec, e, s_alpha, window );
        ASSERT_TRUE( got );
        EXPECT_EQ( *got, expected ) << mask;
        classes.insert( to_string( *got ) );

        // through a session too, at a non-zero epoch
        auto session = timed( 100 );
        Event shifted = e;
        shifted.at += 100;
        const auto record = session.submit_event( shifted );
        EXPECT_EQ( record.label, expected ) << mask;
    }
    EXPECT_EQ( classes.size(), 8u );
}

TEST( Submit, OnTimeAndLatePrices )
{
    auto on_time = timed();
    const auto r1 = on_time.submit_event( Event::perform( 20, "s", "alpha", right_pizza() ) );
    EXPECT_EQ( on_time.state(), ContractState::active( { NormAtom::obligation( "p", "beta_normal" ) } ) );
    EXPECT_EQ( amount_of( on_time.spec(), on_time.state().norms().begin().operator*() ), "13.95" );
    EXPECT_EQ( r1.before_key, "{O(s, alpha)}" );
    EXPECT_EQ( r1.after_key, "{O(p, beta_normal)}" );

    auto late = timed();
    late.submit_event( Event::perform( 45, "s", "alpha", right_pizza() ) );
    ASSERT_EQ( late.log().size(), 1u ); // no lapse got in first
    EXPECT_EQ( late.state(), ContractState::active( { NormAtom::obligation( "p", "beta" ) } ) );
    const auto reduced = amount_of( late.spec(), *late.state().norms().begin() );
    EXPECT_EQ( reduced, "12.95" );
    EXPECT_EQ( ( *Decimal::parse( "13.95" ) - *Decimal::parse( "1.00" ) ).to_string( 2 ), reduced );
}

TEST( Submit, UnexpectedEventLeavesStateAlone )
{
    auto s = open_session( load_bundled( "pizza_simple" ), 0 );
    const auto before = s.state();
    EXPECT_EQ( code_of( [ & ] { s.submit_event( Event::perform( 3, "p", "beta", {} ) ); } ), errc::unexpected_event );
    EXPECT_EQ( s.state(), before );
    EXPECT_TRUE( s.log().empty() );
    EXPECT_EQ( s.clock(), 0 );
    ASSERT_EQ( s.rejections().size(), 1u );
    EXPECT_EQ( s.rejections()[ 0 ].code, errc::unexpected_event );
}

TEST( Submit, StaleAndTerminal )
{
    auto s = timed();
    s.submit_event( Event::perform( 20, "s", "alpha", right_pizza() ) );
    EXPECT_EQ( code_of( [ & ] { s.submit_event( Event::perform( 10, "p", "beta_normal", { { "amount", *Decimal::parse( "13.95" ) } } ) ); } ),
               errc::stale_timestamp );
    s.submit_event( Event::perform( 25, "p", "beta_normal", { { "amount", *Decimal::parse( "13.95" ) } } ) );
    EXPECT_EQ( s.state(), ContractState::terminated( TerminationClass::happy ) );
    EXPECT_EQ( code_of( [ & ] { s.submit_event( Event::perform( 30, "s", "alpha", right_pizza() ) ); } ), errc::terminal_state );
    EXPECT_EQ( code_of( [ & ] { s.advance_clock( 10 ); } ), errc::stale_timestamp );
}

TEST( Submit, WrongPerformerBreachesSimple )
{
    auto s = open_session( load_bundled( "pizza_simple" ), 0 );
    s.submit_event( Event::perform( 5, "p", "alpha", {} ) );
    ASSERT_EQ( s.active_norms().size(), 1u );
    EXPECT_EQ( s.active_norms()[ 0 ].atom, NormAtom::obligation( "s", "phi" ) );
}

TEST( Clock, LapseFiresOnce )
{
    auto s = timed();
    EXPECT_TRUE( s.advance_clock( 29 ).empty() );
    const auto records = s.advance_clock( 31 );
    ASSERT_EQ( records.size(), 1u );
    EXPECT_TRUE( records[ 0 ].is_lapse() );
    EXPECT_EQ( records[ 0 ].at, 31 );
    EXPECT_EQ( records[ 0 ].label, TransitionLabel::violate( "s", "alpha", ViolationRefinement::lapsed() ) );
    EXPECT_EQ( s.state(), ContractState::active( { NormAtom::obligation( "s", "alpha_late" ) } ) );
    EXPECT_TRUE( s.advance_clock( 40 ).empty() );
    EXPECT_EQ( s.log().size(), 1u );
    EXPECT_EQ( s.clock(), 40 );
}

TEST( Clock, LapseIsRecordedJustAfterTheDeadline )
{
    auto s = timed( 100 );
    const auto records = s.advance_clock( 500 );
    ASSERT_EQ( records.size(), 1u );
    EXPECT_EQ( records[ 0 ].at, 131 );
}

TEST( ActiveNorms, Examples )
{
    auto s = timed();
    const auto fresh = s.active_norms();
    ASSERT_EQ( fresh.size(), 1u );
    EXPECT_EQ( fresh[ 0 ].atom, s_alpha );
    EXPECT_EQ( fresh[ 0 ].deadline, 30 );
    EXPECT_EQ( timed( 60 ).active_norms()[ 0 ].deadline, 90 );

    s.submit_event( Event::perform( 20, "s", "alpha", right_pizza() ) );
    s.submit_event( Event::perform( 25, "p", "beta_normal", { { "amount", *Decimal::parse( "13.95" ) } } ) );
    EXPECT_TRUE( s.active_norms().empty() );
}

TEST( History, Examples )
{
    auto s = timed();
    EXPECT_TRUE( s.history().empty() );
    s.submit_event( Event::perform( 20, "s", "alpha", right_pizza() ) );
    s.submit_event( Event::perform( 25, "p", "beta_normal", { { "amount", *Decimal::parse( "13.95" ) } } ) );
    const auto h = s.history();
    ASSERT_EQ( h.size(), 2u );
    EXPECT_EQ( h[ 0 ].after_key, h[ 1 ].before_key );

    auto t = timed();
    t.advance_clock( 31 );
    t.submit_event( Event::perform( 40, "s", "alpha_late", right_pizza() ) );
    const auto h2 = t.history();
    ASSERT_EQ( h2.size(), 2u );
    EXPECT_TRUE( h2[ 0 ].is_lapse() );
    EXPECT_LT( h2[ 0 ].at, h2[ 1 ].at );
    EXPECT_EQ( replay( t.spec(), h2 ), t.state() );
}

TEST( Feed, BundledEventFiles )
{
    auto s = timed();
    for ( const auto& e : load_events( "no_show" ) )
        s.feed( e );
    ASSERT_EQ( s.log().size(), 1u );
    EXPECT_TRUE( s.log()[ 0 ].is_lapse() );

    auto late = timed();
    for ( const auto& e : load_events( "late" ) )
        late.feed( e );
    EXPECT_EQ( late.state(), ContractState::active( { NormAtom::obligation( "p", "beta" ) } ) );
}

TEST( Replay, RejectsTamperedLog )
{
    auto s = timed();
    s.submit_event( Event::perform( 20, "s", "alpha", right_pizza() ) );
    auto log = s.log();
    log[ 0 ].after_key = "{O(p, beta)}";
    EXPECT_EQ( code_of( [ & ] { (void)replay( s.spec(), log ); } ), errc::corrupt_snapshot );
}

// Random event streams: the folded log always equals the live state, and a
// failed submission changes nothing but the rejection list.
TEST( Replay, RandomSequencesOnBundledSpecs )
{
    std::mt19937_64 rng{ 31337 };
    auto pick = [ & ]( std::size_t n ) { return static_cast<std::size_t>( rng() % n ); };
    std::size_t records = 0, terminated = 0;
    for ( const auto& name : bundled )
    {
        const auto spec = load_bundled( name );
        for ( int run = 0; run < 100; ++run )
        {
            const Time epoch = static_cast<Time>( pick( 50 ) );
            auto session = open_session( spec, epoch );
            Time t = epoch;
            for ( int step = 0; step < 12 && !session.state().is_terminated(); ++step )
            {
                t += static_cast<Time>( pick( 20 ) );
                Event e = Event::tick( t );
                const auto& norms = session.state().norms();
                const auto roll = pick( 10 );
                if ( roll < 6 && !norms.empty() )
                {
                    auto it = norms.begin();
                    std::advance( it, static_cast<std::ptrdiff_t>( pick( norms.size() ) ) );
                    if ( it->is_power() )
                        e = Event::exercise( t, it->bearer(), it->as_power().grant );
                    else
                    {
                        const auto& o = it->as_obligation();
                        Attrs attrs = spec.find_proposition( o.proposition )->attrs;
                        if ( pick( 4 ) == 0 )
                            attrs[ "noise" ] = std::string{ "x" };
                        e = Event::perform( t, pick( 5 ) == 0 ? spec.agents[ pick( spec.agents.size() ) ] : o.bearer,
                                            o.proposition, attrs );
                    }
                }
                else if ( roll < 8 )
                    e = Event::perform( t, spec.agents[ pick( spec.agents.size() ) ],
                                        spec.propositions[ pick( spec.propositions.size() ) ].name, {} );
                else if ( roll == 8 )
                    e.at = t - 30; // often stale

                const auto state_before = session.state();
                const auto log_before = session.log().size();
                try
                {
                    session.feed( e );
                }
                catch ( const error& )
                {
                    ASSERT_EQ( session.state(), state_before );
                    ASSERT_EQ( session.log().size(), log_before );
                }
                ASSERT_EQ( replay( spec, session.log(), epoch ), session.state() ) << name;
            }
            const auto& log = session.log();
            records += log.size();
            terminated += session.state().is_terminated();
            for ( std::size_t i = 1; i < log.size(); ++i )
            {
                ASSERT_EQ( log[ i - 1 ].after_key, log[ i ].before_key );
                ASSERT_LE( log[ i - 1 ].at, log[ i ].at );
            }
        }
    }
    // the streams do drive the contracts
    EXPECT_GT( records, 600u );
    EXPECT_GT( terminated, 200u );
}
