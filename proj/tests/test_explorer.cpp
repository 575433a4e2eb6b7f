#include "support/fixtures.hpp"

#include <pact/explorer.hpp>

#include <gtest/gtest.h>

using namespace pact;
using namespace pact_test;

namespace
{

std::vector<std::string> texts( const LabelPath& p )
{
    std::vector<std::string> out;
    for ( const auto& l : p )
        out.push_back( to_string( l ) );
    return out;
}

void leaves( const ScenarioNode& n, std::vector<const ScenarioNode*>& out )
{
    if ( n.children.empty() )
        out.push_back( &n );
    for ( const auto& c : n.children )
        leaves( c, out );
}

// longest simple path from the initial node, by exhaustive search
std::size_t longest_simple_path( const StateGraph& g, const std::string& at, std::set<std::string>& seen )
{
    std::size_t best = 0;
    for ( const auto* e : g.out_edges( at ) )
    {
        if ( seen.contains( e->to ) )
            continue;
        seen.insert( e->to );
        best = std::max( best, 1 + longest_simple_path( g, e->to, seen ) );
        seen.erase( e->to );
    }
    return best;
}

Attrs right_pizza()
{
    return { { "desc", std::string{ "good-earth-vegetarian" } },
             { "onions", std::string{ "none" } },
             { "qty", std::string{ "1" } },
             { "size", std::string{ "large" } } };
}

} // namespace

TEST( Expand, DepthOne )
{
    const auto spec = load_bundled( "pizza_simple" );
    const auto root = expand( spec, initial_state( spec ), 1 );
    ASSERT_EQ( root.children.size(), 2u );
    EXPECT_EQ( to_string( *root.children[ 0 ].via ), "s: alpha" );
    EXPECT_EQ( to_string( *root.children[ 1 ].via ), "not s: alpha / lapse" );
    EXPECT_EQ( root.depth(), 1u );
}

TEST( Expand, DepthZeroIsALeaf )
{
    const auto spec = load_bundled( "pizza_simple" );
    const auto root = expand( spec, initial_state( spec ), 0 );
    EXPECT_TRUE( root.children.empty() );
    EXPECT_FALSE( root.via );
}

TEST( Expand, DeepEnoughReachesTerminalsOrRevisits )
{
    const auto spec = load_bundled( "pizza_simple" );
    const auto g = build_graph( spec );
    std::set<std::string> seen{ g.initial };
    const auto bound = longest_simple_path( g, g.initial, seen );
    EXPECT_LE( bound, 4u );

    const auto root = expand( spec, initial_state( spec ), 4 );
    std::vector<const ScenarioNode*> ls;
    leaves( root, ls );
    for ( const auto* l : ls )
        EXPECT_TRUE( l->state.is_terminated() || l->revisit ) << canonical_key( l->state );
}

TEST( Expand, MarksRevisits )
{
    // fulfilling x hands the same obligation straight back
    auto spec = parse( "contract loop\nagents a\nproposition x by a\ninitially O(a, x)\n"
                       "rule again: O(a, x) -[ a: x ]-> O(a, x)\n" )
                    .value();
    const auto root = expand( spec, initial_state( spec ), 3 );
    ASSERT_FALSE( root.children.empty() );
    const auto& first = root.children[ 0 ];
    EXPECT_EQ( first.revisit, "{O(a, x)}" );
    EXPECT_TRUE( first.children.empty() );
}

TEST( FindPaths, UnhappyEndings )
{
    const auto g = build_graph( load_bundled( "pizza_simple" ) );
    const auto paths = find_paths(
        g, []( const ContractState& s ) { return s == ContractState::terminated( TerminationClass::unhappy ); }, 3 );
    std::set<std::vector<std::string>> got;
    for ( const auto& p : paths )
        got.insert( texts( p ) );
    const std::set<std::vector<std::string>> expected{
        { "not s: alpha / lapse", "not s: phi / lapse" },
        { "s: alpha", "not p: beta / lapse" },
        { "not s: alpha / lapse", "s: phi", "not p: beta / lapse" },
    };
    EXPECT_EQ( paths.size(), 3u );
    EXPECT_EQ( got, expected );
    // ordered by the rule order of their steps
    EXPECT_EQ( texts( paths[ 0 ] ), ( std::vector<std::string>{ "s: alpha", "not p: beta / lapse" } ) );
}

TEST( FindPaths, TrivialCases )
{
    const auto g = build_graph( load_bundled( "pizza_simple" ) );
    const auto init = g.nodes.at( g.initial );
    const auto self = find_paths( g, [ & ]( const ContractState& s ) { return s == init; }, 3 );
    ASSERT_EQ( self.size(), 1u );
    EXPECT_TRUE( self[ 0 ].empty() );

    const auto none = find_paths(
        g, []( const ContractState& s ) { return s.norms().contains( NormAtom::obligation( "p", "nothing" ) ); }, 5 );
    EXPECT_TRUE( none.empty() );

    EXPECT_THROW( find_paths( g, []( const ContractState& ) { return true; }, 0 ), error );
}

TEST( FindPaths, LengthBound )
{
    const auto g = build_graph( load_bundled( "pizza_simple" ) );
    const auto happy = []( const ContractState& s ) { return s == ContractState::terminated( TerminationClass::happy ); };
    EXPECT_EQ( find_paths( g, happy, 2 ).size(), 1u );
    EXPECT_EQ( find_paths( g, happy, 3 ).size(), 2u );
}

TEST( WhatIf, LateDeliveryOnACopy )
{
    const auto session = open_session( load_bundled( "pizza_timed" ), 0 );
    const std::vector<Event> events{ Event::perform( 45, "s", "alpha", right_pizza() ) };
    const auto r = what_if( session, events );
    EXPECT_EQ( r.final_state, ContractState::active( { NormAtom::obligation( "p", "beta" ) } ) );
    EXPECT_EQ( r.records.size(), 1u );
    EXPECT_TRUE( r.failures.empty() );
    EXPECT_EQ( session.state(), ContractState::active( { NormAtom::obligation( "s", "alpha" ) } ) );
    EXPECT_TRUE( session.log().empty() );
}

TEST( WhatIf, ReportsFailuresAndContinues )
{
    const auto session = open_session( load_bundled( "pizza_timed" ), 0 );
    const std::vector<Event> events{ Event::perform( 5, "p", "beta", {} ), Event::tick( 31 ),
                                     Event::perform( 20, "s", "alpha_late", right_pizza() ),
                                     Event::perform( 40, "s", "alpha_late", right_pizza() ) };
    const auto r = what_if( session, events );
    ASSERT_EQ( r.failures.size(), 2u );
    EXPECT_EQ( r.failures[ 0 ].index, 0u );
    EXPECT_EQ( r.failures[ 0 ].code, errc::unexpected_event );
    EXPECT_EQ( r.failures[ 1 ].code, errc::stale_timestamp );
    EXPECT_EQ( r.records.size(), 2u );
    EXPECT_EQ( r.final_state, ContractState::active( { NormAtom::obligation( "p", "beta" ) } ) );
    EXPECT_EQ( r.clock, 40 );
}
