#pragma once

// Successor semantics and the explicit state graph a spec implicitly defines.
//
// Built-in axioms:
//   (i)   every active obligation O(x,Y) enables a fulfilment x: Y;
//   (ii)  every active power POW(x,R) enables its exercise;
//   (iii) after exercising POW(x,R), R holds (or the contract has ended when
//         R is a termination);
// plus, when config.violation_axiom is set, every active obligation enables
// the lapse violation and every refined violation some rule mentions.

#include "norm.hpp"

#include <deque>
#include <limits>

namespace pact
{

inline ContractState initial_state( const ContractSpec& spec )
{
    return ContractState::active( { spec.initial.begin(), spec.initial.end() } );
}

// Distinct fulfilment windows the rules attach to an obligation, in rule
// order; a single unqualified window when no rule mentions one.
inline std::vector<TemporalQualifier> fulfilment_windows( const ContractSpec& spec, const Obligation& o )
{
    std::vector<TemporalQualifier> out;
    for ( const auto& r : spec.rules )
        if ( const auto* f = std::get_if<Fulfil>( &r.label.kind );
             f && f->agent == o.bearer && f->proposition == o.proposition )
            if ( std::find( out.begin(), out.end(), r.label.qualifier ) == out.end() )
                out.push_back( r.label.qualifier );
    if ( out.empty() )
        out.emplace_back();
    return out;
}

inline std::vector<TransitionLabel> enabled_transitions( const ContractSpec& spec, const ContractState& state )
{
    std::vector<TransitionLabel> out;
    if ( state.is_terminated() )
        return out;

    auto add = [ &out ]( TransitionLabel l ) {
        if ( std::find( out.begin(), out.end(), l ) == out.end() )
            out.push_back( std::move( l ) );
    };

    for ( const auto& r : spec.rules )
    {
        const auto& l = r.label;
        if ( const auto* e = std::get_if<Exercise>( &l.kind ) )
        {
            if ( holds( state, Power{ e->agent, e->grant } ) )
                add( l );
            continue;
        }
        const auto subject = l.subject();
        if ( !holds( state, *subject ) )
            continue;
        if ( l.is_fulfil() )
            add( l );
        else if ( spec.config.violation_axiom && std::get<Violate>( l.kind ).refinement )
            add( l );
    }

    for ( const auto& atom : state.norms() )
    {
        if ( atom.is_power() )
        {
            add( TransitionLabel::exercise( atom.bearer(), atom.as_power().grant ) );
            continue;
        }
        const auto& o = atom.as_obligation();
        const bool has_fulfil = std::any_of( out.begin(), out.end(), [ & ]( const TransitionLabel& l ) {
            const auto* f = std::get_if<Fulfil>( &l.kind );
            return f && f->agent == o.bearer && f->proposition == o.proposition;
        } );
        if ( !has_fulfil )
            add( TransitionLabel::fulfil( o.bearer, o.proposition ) );
        if ( spec.config.violation_axiom )
            add( TransitionLabel::violate( o.bearer, o.proposition, ViolationRefinement::lapsed() ) );
    }
    return out;
}

// Whether `label` is a legal step from `state`. Wider than the enumerated
// enabled set: any well-formed refinement of a violation is admitted, since
// monitoring can observe refinements no rule names.
inline bool admits( const ContractSpec& spec, const ContractState& state, const TransitionLabel& label )
{
    if ( state.is_terminated() )
        return false;
    if ( const auto* e = std::get_if<Exercise>( &label.kind ) )
        return label.qualifier.is_none() && holds( state, Power{ e->agent, e->grant } );
    const auto subject = *label.subject();
    if ( !holds( state, subject ) )
        return false;
    if ( label.is_fulfil() )
    {
        const auto windows = fulfilment_windows( spec, subject );
        return std::find( windows.begin(), windows.end(), label.qualifier ) != windows.end();
    }
    const auto& v = std::get<Violate>( label.kind );
    if ( !spec.config.violation_axiom || !v.refinement || !v.refinement->valid() )
        return false;
    if ( label.qualifier.is_none() )
        return true;
    return std::any_of( spec.rules.begin(), spec.rules.end(), [ & ]( const Rule& r ) {
        return r.label.is_violate() && r.label.qualifier == label.qualifier && r.label.subject() == label.subject();
    } );
}

// The rules one transition fires: matching spec rules whose guard holds, plus
// the implicit rules that realize the axioms and the no-rule defaults.
struct Firing
{
    std::vector<Rule> rules;
    std::vector<std::size_t> indices; // spec rules only, ascending

    [[nodiscard]] std::size_t rule_order() const
    {
        return indices.empty() ? std::numeric_limits<std::size_t>::max() : indices.front();
    }
};

inline Firing fire( const ContractSpec& spec, const ContractState& state, const TransitionLabel& label )
{
    Firing out;
    auto take = [ & ]( auto&& matches ) {
        for ( std::size_t i = 0; i < spec.rules.size(); ++i )
            if ( holds( state, spec.rules[ i ].guard ) && matches( spec.rules[ i ].label ) )
            {
                out.rules.push_back( spec.rules[ i ] );
                out.indices.push_back( i );
            }
    };

    if ( const auto* v = std::get_if<Violate>( &label.kind ) )
    {
        // Most specific first: an exact refinement beats the generic label.
        take( [ & ]( const TransitionLabel& l ) { return l == label; } );
        if ( out.indices.empty() )
        {
            const auto generic = TransitionLabel::violate( v->agent, v->proposition, std::nullopt, label.qualifier );
            take( [ & ]( const TransitionLabel& l ) { return l == generic; } );
        }
    }
    else
    {
        take( [ & ]( const TransitionLabel& l ) { return l == label; } );
    }

    if ( const auto subject = label.subject() )
    {
        // The performed or violated obligation is discharged.
        out.rules.push_back( { "(discharge)", NormAtom{ *subject }, label, {} } );
        if ( out.indices.empty() && label.is_violate() )
            out.rules.push_back( { "(unremedied)", NormAtom{ *subject }, label, { Terminate{ TerminationClass::unhappy } } } );
    }
    else
    {
        const auto& e = std::get<Exercise>( label.kind );
        Consequent granted = std::holds_alternative<Obligation>( e.grant )
                                 ? Consequent{ Add{ NormAtom{ std::get<Obligation>( e.grant ) } } }
                                 : Consequent{ Terminate{ std::get<Termination>( e.grant ).cls } };
        out.rules.push_back( { "(exercise)", NormAtom{ Power{ e.agent, e.grant } }, label, { std::move( granted ) } } );
    }
    return out;
}

inline ContractState successor( const ContractSpec& spec, const ContractState& state, const TransitionLabel& label )
{
    if ( !admits( spec, state, label ) )
        throw error( errc::precondition, "transition '" + to_string( label ) + "' is not enabled in " +
                                             canonical_key( state ) );
    const auto firing = fire( spec, state, label );
    return apply_effects( state, firing.rules, spec.config.frame_policy );
}

// ---------------------------------------------------------------------------

struct GraphEdge
{
    std::string from;
    TransitionLabel label;
    std::string to;
    std::size_t rule_order = std::numeric_limits<std::size_t>::max();

    friend bool operator==( const GraphEdge&, const GraphEdge& ) = default;
};

struct StateGraph
{
    std::map<std::string, ContractState> nodes;
    std::vector<std::string> discovery; // BFS order, initial first
    std::vector<GraphEdge> edges;
    std::string initial;

    [[nodiscard]] std::vector<const GraphEdge*> out_edges( const std::string& key ) const
    {
        std::vector<const GraphEdge*> out;
        for ( const auto& e : edges )
            if ( e.from == key )
                out.push_back( &e );
        return out;
    }
};

inline StateGraph build_graph( const ContractSpec& spec )
{
    StateGraph g;
    const auto init = initial_state( spec );
    g.initial = canonical_key( init );
    g.nodes.emplace( g.initial, init );
    g.discovery.push_back( g.initial );

    std::deque<std::string> frontier{ g.initial };
    while ( !frontier.empty() )
    {
        const std::string key = frontier.front();
        frontier.pop_front();
        const ContractState state = g.nodes.at( key );
        for ( const auto& label : enabled_transitions( spec, state ) )
        {
            const auto firing = fire( spec, state, label );
            const auto next = apply_effects( state, firing.rules, spec.config.frame_policy );
            const auto next_key = canonical_key( next );
            if ( !g.nodes.contains( next_key ) )
            {
                if ( g.nodes.size() >= spec.config.state_bound )
                    throw error( errc::state_bound, "state bound " + std::to_string( spec.config.state_bound ) +
                                                        " exceeded with " + std::to_string( frontier.size() + 1 ) +
                                                        " states still on the frontier" );
                g.nodes.emplace( next_key, next );
                g.discovery.push_back( next_key );
                frontier.push_back( next_key );
            }
            g.edges.push_back( { key, label, next_key, firing.rule_order() } );
        }
    }
    return g;
}

// Terminated nodes and their class. Terminated states carry the class they
// were entered with (an explicit `terminated happy|unhappy`, a power to
// terminate, or the unremedied-violation default), so the node decides.
inline std::map<std::string, TerminationClass> classify_terminals( const StateGraph& graph )
{
    std::map<std::string, TerminationClass> out;
    for ( const auto& [ key, state ] : graph.nodes )
        if ( state.is_terminated() )
            out.emplace( key, *state.termination() );
    return out;
}

// How each edge into a terminal arrived: fulfilment edges are the happy
// route, violation edges the unhappy one, whatever class the node carries.
struct TerminalArrival
{
    std::string terminal;
    std::size_t edge;
    TerminationClass by_edge_kind;
    TerminationClass node_class;
};

inline std::vector<TerminalArrival> terminal_arrivals( const StateGraph& graph )
{
    std::vector<TerminalArrival> out;
    for ( std::size_t i = 0; i < graph.edges.size(); ++i )
    {
        const auto& e = graph.edges[ i ];
        const auto& target = graph.nodes.at( e.to );
        if ( !target.is_terminated() )
            continue;
        const auto kind = e.label.is_violate() ? TerminationClass::unhappy : TerminationClass::happy;
        out.push_back( { e.to, i, kind, *target.termination() } );
    }
    return out;
}

// ---------------------------------------------------------------------------

struct CtdTriple
{
    NormAtom primary;
    TransitionLabel via;
    NormAtom secondary;

    friend bool operator==( const CtdTriple&, const CtdTriple& ) = default;
};

// A violation of O(x,Y) that brings a new obligation O(x,Z), Z != Y, for the
// same bearer into force: directly, or through a power the violation grants
// and whose exercise yields it.
inline std::vector<CtdTriple> detect_ctd( const StateGraph& graph )
{
    struct Found
    {
        CtdTriple triple;
        std::size_t order;
        std::size_t seq;
    };
    std::vector<Found> found;

    auto record = [ & ]( const GraphEdge& e, const Obligation& primary, const Obligation& secondary, std::size_t seq ) {
        CtdTriple t{ primary, e.label, secondary };
        for ( const auto& f : found )
            if ( f.triple == t )
                return;
        found.push_back( { std::move( t ), e.rule_order, seq } );
    };

    for ( std::size_t i = 0; i < graph.edges.size(); ++i )
    {
        const auto& e = graph.edges[ i ];
        if ( !e.label.is_violate() )
            continue;
        const auto primary = *e.label.subject();
        const auto& source = graph.nodes.at( e.from );
        const auto& target = graph.nodes.at( e.to );
        if ( !holds( source, primary ) || target.is_terminated() )
            continue;

        auto consider = [ & ]( const NormAtom& atom ) {
            if ( !atom.is_obligation() || holds( source, atom ) )
                return;
            const auto& o = atom.as_obligation();
            if ( o.bearer == primary.bearer && o.proposition != primary.proposition )
                record( e, primary, o, i );
        };

        for ( const auto& atom : target.norms() )
        {
            consider( atom );
            if ( !atom.is_power() || !std::holds_alternative<Obligation>( atom.as_power().grant ) )
                continue;
            const auto exercise = TransitionLabel::exercise( atom.bearer(), atom.as_power().grant );
            for ( const auto* out : graph.out_edges( e.to ) )
                if ( out->label == exercise && graph.nodes.at( out->to ).norms().contains( NormAtom{
                                                   std::get<Obligation>( atom.as_power().grant ) } ) )
                    consider( NormAtom{ std::get<Obligation>( atom.as_power().grant ) } );
        }
    }

    std::stable_sort( found.begin(), found.end(), []( const Found& a, const Found& b ) {
        return std::tie( a.order, a.seq ) < std::tie( b.order, b.seq );
    } );
    std::vector<CtdTriple> out;
    for ( auto& f : found )
        out.push_back( std::move( f.triple ) );
    return out;
}

// ---------------------------------------------------------------------------

enum class ProvisionClass
{
    promissory_condition,
    warranty,
    intermediate_term,
};

inline const char* to_string( ProvisionClass c )
{
    switch ( c )
    {
    case ProvisionClass::promissory_condition: return "promissory-condition";
    case ProvisionClass::warranty: return "warranty";
    case ProvisionClass::intermediate_term: return "intermediate-term";
    }
    return "?";
}

// Reads the breach consequences of an obligation:
//  - breach ends the contract, hands the counter-party a power to end it, or
//    explicitly discharges counter-party obligations (the contract is void
//    as far as they are concerned)              -> promissory condition;
//  - counter-party obligations remain in force and the offending party owes
//    a reparation (directly or via a counter-party power) -> warranty;
//  - no rule handles the breach, or it does neither -> intermediate term.
inline ProvisionClass classify_provision( const ContractSpec& spec, const NormAtom& obligation )
{
    if ( !obligation.is_obligation() )
        throw error( errc::precondition, to_string( obligation ) + " is not an obligation" );
    const bool guarded = std::any_of( spec.rules.begin(), spec.rules.end(),
                                      [ & ]( const Rule& r ) { return r.guard == obligation; } );
    if ( !guarded )
        throw error( errc::not_found, "no rule is guarded by " + to_string( obligation ) );

    const auto& o = obligation.as_obligation();
    std::vector<TransitionLabel> breaches;
    for ( const auto& r : spec.rules )
    {
        const auto* v = std::get_if<Violate>( &r.label.kind );
        if ( !v || r.label.subject() != o )
            continue;
        auto l = r.label;
        if ( !v->refinement )
            std::get<Violate>( l.kind ).refinement = ViolationRefinement::lapsed();
        if ( std::find( breaches.begin(), breaches.end(), l ) == breaches.end() )
            breaches.push_back( std::move( l ) );
    }

    // Source states: reachable states where the obligation holds, or the
    // obligation alone when the graph is unavailable.
    std::vector<ContractState> sources;
    try
    {
        const auto g = build_graph( spec );
        for ( const auto& key : g.discovery )
            if ( holds( g.nodes.at( key ), obligation ) )
                sources.push_back( g.nodes.at( key ) );
    }
    catch ( const error& )
    {
        sources.clear();
    }
    if ( sources.empty() )
        sources.push_back( ContractState::active( { obligation } ) );

    bool any_void = false;
    bool any_warranty = false;
    for ( const auto& source : sources )
        for ( const auto& breach : breaches )
        {
            const auto firing = fire( spec, source, breach );
            if ( firing.indices.empty() )
                continue;
            ContractState target;
            try
            {
                target = apply_effects( source, firing.rules, spec.config.frame_policy );
            }
            catch ( const error& )
            {
                continue;
            }
            if ( target.is_terminated() )
            {
                any_void = true;
                continue;
            }
            for ( const auto& r : firing.rules )
                for ( const auto& c : r.consequents )
                    if ( const auto* rm = std::get_if<Remove>( &c ); rm && rm->atom.bearer() != o.bearer )
                        any_void = true;

            bool reparation = false;
            bool counter_in_force = false;
            auto is_reparation = [ & ]( const Obligation& n ) {
                return n.bearer == o.bearer && n.proposition != o.proposition && !holds( source, NormAtom{ n } );
            };
            for ( const auto& atom : target.norms() )
            {
                if ( atom.is_obligation() )
                {
                    reparation |= is_reparation( atom.as_obligation() );
                    counter_in_force |= atom.bearer() != o.bearer;
                    continue;
                }
                const auto& p = atom.as_power();
                if ( p.bearer == o.bearer )
                    continue;
                if ( std::holds_alternative<Termination>( p.grant ) )
                    any_void = true;
                else
                    reparation |= is_reparation( std::get<Obligation>( p.grant ) );
            }
            any_warranty |= reparation && counter_in_force;
        }

    if ( any_void )
        return ProvisionClass::promissory_condition;
    if ( any_warranty )
        return ProvisionClass::warranty;
    return ProvisionClass::intermediate_term;
}

} // namespace pact
