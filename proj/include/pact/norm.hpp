#pragma once

// Core vocabulary shared by every other header: agents, propositions, norm
// atoms (obligations and powers), transition labels, contract states, rules
// and events, plus the state algebra (canonical keys, membership, effects).

#include "error.hpp"

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pact
{

using AgentId = std::string;

// Integer time units (minutes) since the contract epoch.
using Time = std::int64_t;

// Exact decimal amount, kept normalized (no trailing fractional zeros) so
// that equality is value equality.
class Decimal
{
    std::int64_t _units = 0;
    int _scale = 0;

    void normalize()
    {
        while ( _scale > 0 && _units % 10 == 0 )
        {
            _units /= 10;
            --_scale;
        }
        if ( _units == 0 )
            _scale = 0;
    }

    static std::int64_t pow10( int n )
    {
        std::int64_t r = 1;
        while ( n-- > 0 )
            r *= 10;
        return r;
    }

public:
    Decimal() = default;
    Decimal( std::int64_t units, int scale ) : _units{ units }, _scale{ scale } { normalize(); }

    // Accepts -?digits(.digits)?; returns nullopt on anything else.
    static std::optional<Decimal> parse( std::string_view text )
    {
        if ( text.empty() )
            return std::nullopt;
        bool negative = false;
        std::size_t i = 0;
        if ( text[ 0 ] == '-' )
        {
            negative = true;
            ++i;
        }
        std::int64_t units = 0;
        int scale = 0;
        bool seen_digit = false;
        bool seen_point = false;
        for ( ; i < text.size(); ++i )
        {
            const char c = text[ i ];
            if ( c == '.' )
            {
                if ( seen_point || !seen_digit )
                    return std::nullopt;
                seen_point = true;
                continue;
            }
            if ( c < '0' || c > '9' )
                return std::nullopt;
            if ( units > ( INT64_MAX - 9 ) / 10 || scale > 17 )
                return std::nullopt;
            units = units * 10 + ( c - '0' );
            seen_digit = true;
            if ( seen_point )
                ++scale;
        }
        if ( !seen_digit || text.back() == '.' )
            return std::nullopt;
        return Decimal{ negative ? -units : units, scale };
    }

    [[nodiscard]] std::int64_t units() const { return _units; }
    [[nodiscard]] int scale() const { return _scale; }

    friend Decimal operator+( const Decimal& a, const Decimal& b )
    {
        const int scale = std::max( a._scale, b._scale );
        return { a._units * pow10( scale - a._scale ) + b._units * pow10( scale - b._scale ), scale };
    }

    friend Decimal operator-( const Decimal& a, const Decimal& b )
    {
        return a + Decimal{ -b._units, b._scale };
    }

    friend bool operator==( const Decimal&, const Decimal& ) = default;
    friend auto operator<=>( const Decimal&, const Decimal& ) = default;

    [[nodiscard]] std::string to_string() const
    {
        const bool negative = _units < 0;
        std::string digits = std::to_string( negative ? -_units : _units );
        if ( _scale > 0 )
        {
            if ( digits.size() <= static_cast<std::size_t>( _scale ) )
                digits.insert( 0, static_cast<std::size_t>( _scale ) - digits.size() + 1, '0' );
            digits.insert( digits.size() - static_cast<std::size_t>( _scale ), 1, '.' );
        }
        return negative ? "-" + digits : digits;
    }

    // Fixed number of fractional digits, for display ("12.95", "13.00").
    [[nodiscard]] std::string to_string( int places ) const
    {
        if ( places <= _scale )
            return to_string();
        std::string s = to_string();
        if ( _scale == 0 )
            s += '.';
        s.append( static_cast<std::size_t>( places - _scale ), '0' );
        return s;
    }
};

using AttrValue = std::variant<std::string, Decimal>;
using Attrs = std::map<std::string, AttrValue>;

struct SourceSpan
{
    int line = 1;
    int col_start = 1;
    int col_end = 1;

    friend bool operator==( const SourceSpan&, const SourceSpan& ) = default;
};

struct Proposition
{
    std::string name;
    std::string display;
    Attrs attrs;
    std::optional<AgentId> expected_performer;
    SourceSpan where{};

    friend bool operator==( const Proposition& a, const Proposition& b )
    {
        return a.name == b.name && a.display == b.display && a.attrs == b.attrs &&
               a.expected_performer == b.expected_performer;
    }
};

enum class TerminationClass
{
    happy,
    unhappy,
};

inline const char* to_string( TerminationClass cls )
{
    return cls == TerminationClass::happy ? "happy" : "unhappy";
}

struct Obligation
{
    AgentId bearer;
    std::string proposition;

    friend auto operator<=>( const Obligation&, const Obligation& ) = default;
};

struct Termination
{
    TerminationClass cls = TerminationClass::unhappy;

    friend auto operator<=>( const Termination&, const Termination& ) = default;
};

// What exercising a power brings into force: one obligation or the end of
// the contract. Powers never nest further.
using PowerGrant = std::variant<Obligation, Termination>;

struct Power
{
    AgentId bearer;
    PowerGrant grant;

    friend auto operator<=>( const Power&, const Power& ) = default;
};

class NormAtom
{
    std::variant<Obligation, Power> _value;

public:
    NormAtom() = default;
    NormAtom( Obligation o ) : _value{ std::move( o ) } {}
    NormAtom( Power p ) : _value{ std::move( p ) } {}

    static NormAtom obligation( AgentId bearer, std::string proposition )
    {
        return Obligation{ std::move( bearer ), std::move( proposition ) };
    }

    static NormAtom power( AgentId bearer, PowerGrant grant )
    {
        return Power{ std::move( bearer ), std::move( grant ) };
    }

    [[nodiscard]] bool is_obligation() const { return std::holds_alternative<Obligation>( _value ); }
    [[nodiscard]] bool is_power() const { return std::holds_alternative<Power>( _value ); }
    [[nodiscard]] const Obligation& as_obligation() const { return std::get<Obligation>( _value ); }
    [[nodiscard]] const Power& as_power() const { return std::get<Power>( _value ); }

    [[nodiscard]] const AgentId& bearer() const
    {
        return is_obligation() ? as_obligation().bearer : as_power().bearer;
    }

    friend auto operator<=>( const NormAtom&, const NormAtom& ) = default;
    friend bool operator==( const NormAtom&, const NormAtom& ) = default;
};

class TemporalQualifier
{
public:
    enum class Kind
    {
        none,
        before,
        after,
        between,
    };

private:
    Kind _kind = Kind::none;
    Time _t1 = 0;
    Time _t2 = 0;

    TemporalQualifier( Kind kind, Time t1, Time t2 ) : _kind{ kind }, _t1{ t1 }, _t2{ t2 } {}

public:
    TemporalQualifier() = default;

    static TemporalQualifier none() { return {}; }
    static TemporalQualifier before( Time t ) { return { Kind::before, t, 0 }; }
    static TemporalQualifier after( Time t ) { return { Kind::after, t, 0 }; }
    static TemporalQualifier between( Time t1, Time t2 ) { return { Kind::between, t1, t2 }; }

    [[nodiscard]] Kind kind() const { return _kind; }
    [[nodiscard]] Time t() const { return _t1; }
    [[nodiscard]] Time t1() const { return _t1; }
    [[nodiscard]] Time t2() const { return _t2; }
    [[nodiscard]] bool is_none() const { return _kind == Kind::none; }

    // Between with t1 >= t2, or a negative bound.
    [[nodiscard]] bool well_formed() const
    {
        if ( _t1 < 0 || _t2 < 0 )
            return false;
        return _kind != Kind::between || _t1 < _t2;
    }

    // before(t) is inclusive, after(t) strict, between(t1, t2) is (t1, t2].
    [[nodiscard]] bool admits( Time at ) const
    {
        switch ( _kind )
        {
        case Kind::none: return true;
        case Kind::before: return at <= _t1;
        case Kind::after: return at > _t1;
        case Kind::between: return at > _t1 && at <= _t2;
        }
        return false;
    }

    // Last admissible instant, when the window is bounded above.
    [[nodiscard]] std::optional<Time> upper_bound() const
    {
        if ( _kind == Kind::before )
            return _t1;
        if ( _kind == Kind::between )
            return _t2;
        return std::nullopt;
    }

    [[nodiscard]] TemporalQualifier shifted( Time offset ) const
    {
        if ( _kind == Kind::none )
            return *this;
        return { _kind, _t1 + offset, _kind == Kind::between ? _t2 + offset : 0 };
    }

    friend auto operator<=>( const TemporalQualifier&, const TemporalQualifier& ) = default;
    friend bool operator==( const TemporalQualifier&, const TemporalQualifier& ) = default;
};

// The failure dimensions of a refined violation. A lapse (no event at all)
// excludes the other three; otherwise at least one of them is set.
struct ViolationRefinement
{
    bool nonconforming = false;
    bool late = false;
    bool wrong_performer = false;
    bool lapse = false;

    static ViolationRefinement lapsed() { return { false, false, false, true }; }

    [[nodiscard]] bool valid() const
    {
        if ( lapse )
            return !nonconforming && !late && !wrong_performer;
        return nonconforming || late || wrong_performer;
    }

    friend auto operator<=>( const ViolationRefinement&, const ViolationRefinement& ) = default;
    friend bool operator==( const ViolationRefinement&, const ViolationRefinement& ) = default;
};

struct Fulfil
{
    AgentId agent;
    std::string proposition;

    friend auto operator<=>( const Fulfil&, const Fulfil& ) = default;
};

// A rule-side violation label may leave the refinement open (the generic
// `not x: Y`); labels produced by the engine always carry one.
struct Violate
{
    AgentId agent;
    std::string proposition;
    std::optional<ViolationRefinement> refinement;

    friend auto operator<=>( const Violate&, const Violate& ) = default;
};

struct Exercise
{
    AgentId agent;
    PowerGrant grant;

    friend auto operator<=>( const Exercise&, const Exercise& ) = default;
};

struct TransitionLabel
{
    std::variant<Fulfil, Violate, Exercise> kind;
    TemporalQualifier qualifier{};

    static TransitionLabel fulfil( AgentId a, std::string p, TemporalQualifier q = {} )
    {
        return { Fulfil{ std::move( a ), std::move( p ) }, q };
    }

    static TransitionLabel violate( AgentId a, std::string p, std::optional<ViolationRefinement> r = std::nullopt,
                                    TemporalQualifier q = {} )
    {
        return { Violate{ std::move( a ), std::move( p ), r }, q };
    }

    static TransitionLabel exercise( AgentId a, PowerGrant g )
    {
        return { Exercise{ std::move( a ), std::move( g ) }, {} };
    }

    [[nodiscard]] bool is_fulfil() const { return std::holds_alternative<Fulfil>( kind ); }
    [[nodiscard]] bool is_violate() const { return std::holds_alternative<Violate>( kind ); }
    [[nodiscard]] bool is_exercise() const { return std::holds_alternative<Exercise>( kind ); }

    [[nodiscard]] const AgentId& agent() const
    {
        return std::visit( []( const auto& k ) -> const AgentId& { return k.agent; }, kind );
    }

    // The obligation a fulfil/violate label is about.
    [[nodiscard]] std::optional<Obligation> subject() const
    {
        if ( const auto* f = std::get_if<Fulfil>( &kind ) )
            return Obligation{ f->agent, f->proposition };
        if ( const auto* v = std::get_if<Violate>( &kind ) )
            return Obligation{ v->agent, v->proposition };
        return std::nullopt;
    }

    friend auto operator<=>( const TransitionLabel&, const TransitionLabel& ) = default;
    friend bool operator==( const TransitionLabel&, const TransitionLabel& ) = default;
};

class ContractState
{
    std::optional<TerminationClass> _terminal;
    std::set<NormAtom> _norms;

public:
    ContractState() = default;

    static ContractState active( std::set<NormAtom> norms )
    {
        ContractState s;
        s._norms = std::move( norms );
        return s;
    }

    static ContractState terminated( TerminationClass cls )
    {
        ContractState s;
        s._terminal = cls;
        return s;
    }

    [[nodiscard]] bool is_terminated() const { return _terminal.has_value(); }
    [[nodiscard]] std::optional<TerminationClass> termination() const { return _terminal; }
    [[nodiscard]] const std::set<NormAtom>& norms() const { return _norms; }

    friend bool operator==( const ContractState&, const ContractState& ) = default;
};

struct Add
{
    NormAtom atom;
    friend bool operator==( const Add&, const Add& ) = default;
};

struct Remove
{
    NormAtom atom;
    friend bool operator==( const Remove&, const Remove& ) = default;
};

struct Terminate
{
    TerminationClass cls = TerminationClass::unhappy;
    friend bool operator==( const Terminate&, const Terminate& ) = default;
};

using Consequent = std::variant<Add, Remove, Terminate>;

struct Rule
{
    std::string id;
    NormAtom guard;
    TransitionLabel label;
    std::vector<Consequent> consequents;
    SourceSpan where{};

    [[nodiscard]] std::optional<TerminationClass> terminates() const
    {
        for ( const auto& c : consequents )
            if ( const auto* t = std::get_if<Terminate>( &c ) )
                return t->cls;
        return std::nullopt;
    }

    friend bool operator==( const Rule& a, const Rule& b )
    {
        return a.id == b.id && a.guard == b.guard && a.label == b.label && a.consequents == b.consequents;
    }
};

enum class FramePolicy
{
    discharge_unmentioned,
    persist_unmentioned,
};

struct EngineConfig
{
    FramePolicy frame_policy = FramePolicy::discharge_unmentioned;
    bool violation_axiom = true;
    std::size_t state_bound = 10000;

    friend bool operator==( const EngineConfig&, const EngineConfig& ) = default;
};

struct ContractSpec
{
    std::string name;
    std::vector<AgentId> agents;
    std::vector<Proposition> propositions;
    std::vector<NormAtom> initial;
    std::vector<Rule> rules;
    EngineConfig config{};

    [[nodiscard]] const Proposition* find_proposition( std::string_view n ) const
    {
        for ( const auto& p : propositions )
            if ( p.name == n )
                return &p;
        return nullptr;
    }

    [[nodiscard]] bool has_agent( std::string_view a ) const
    {
        return std::find( agents.begin(), agents.end(), a ) != agents.end();
    }

    friend bool operator==( const ContractSpec&, const ContractSpec& ) = default;
};

struct Tick
{
    friend bool operator==( const Tick&, const Tick& ) = default;
};

// A timestamped party action: performing a proposition, exercising a power,
// or a bare clock tick (no actor, no attributes).
struct Event
{
    Time at = 0;
    AgentId actor;
    std::variant<std::string, PowerGrant, Tick> act;
    Attrs attrs;

    static Event tick( Time at ) { return { at, {}, Tick{}, {} }; }

    static Event perform( Time at, AgentId actor, std::string proposition, Attrs attrs = {} )
    {
        return { at, std::move( actor ), std::move( proposition ), std::move( attrs ) };
    }

    static Event exercise( Time at, AgentId actor, PowerGrant grant )
    {
        return { at, std::move( actor ), std::move( grant ), {} };
    }

    [[nodiscard]] bool is_tick() const { return std::holds_alternative<Tick>( act ); }
    [[nodiscard]] const std::string* proposition() const { return std::get_if<std::string>( &act ); }
    [[nodiscard]] const PowerGrant* grant() const { return std::get_if<PowerGrant>( &act ); }

    friend bool operator==( const Event&, const Event& ) = default;
};

// ---------------------------------------------------------------------------
// Text forms. These are the notation used in .pact sources, graph exports and
// the wire format.

inline std::string quote( std::string_view text )
{
    std::string out = "\"";
    for ( const char c : text )
    {
        if ( c == '"' || c == '\\' )
            out += '\\';
        out += c;
    }
    return out + "\"";
}

inline std::string to_string( const AttrValue& v )
{
    if ( const auto* s = std::get_if<std::string>( &v ) )
        return quote( *s );
    return std::get<Decimal>( v ).to_string();
}

inline std::string to_string( const Attrs& attrs )
{
    std::string out = "attrs{";
    bool first = true;
    for ( const auto& [ k, v ] : attrs )
    {
        if ( !first )
            out += ", ";
        first = false;
        out += k + "=" + to_string( v );
    }
    return out + "}";
}

inline std::string to_string( const Obligation& o ) { return "O(" + o.bearer + ", " + o.proposition + ")"; }

inline std::string to_string( const PowerGrant& g )
{
    if ( const auto* o = std::get_if<Obligation>( &g ) )
        return to_string( *o );
    return std::string{ "terminated " } + to_string( std::get<Termination>( g ).cls );
}

inline std::string to_string( const NormAtom& a )
{
    if ( a.is_obligation() )
        return to_string( a.as_obligation() );
    return "POW(" + a.as_power().bearer + ", " + to_string( a.as_power().grant ) + ")";
}

inline std::string to_string( const TemporalQualifier& q )
{
    switch ( q.kind() )
    {
    case TemporalQualifier::Kind::none: return "";
    case TemporalQualifier::Kind::before: return "@before(" + std::to_string( q.t() ) + ")";
    case TemporalQualifier::Kind::after: return "@after(" + std::to_string( q.t() ) + ")";
    case TemporalQualifier::Kind::between:
        return "@between(" + std::to_string( q.t1() ) + ", " + std::to_string( q.t2() ) + ")";
    }
    return "";
}

inline std::string to_string( const ViolationRefinement& r )
{
    if ( r.lapse )
        return "lapse";
    std::string out;
    auto append = [ &out ]( const char* name ) {
        if ( !out.empty() )
            out += '+';
        out += name;
    };
    if ( r.nonconforming )
        append( "nonconforming" );
    if ( r.late )
        append( "late" );
    if ( r.wrong_performer )
        append( "wrong_performer" );
    return out;
}

inline std::string to_string( const TransitionLabel& l )
{
    std::string out;
    if ( const auto* f = std::get_if<Fulfil>( &l.kind ) )
        out = f->agent + ": " + f->proposition;
    else if ( const auto* v = std::get_if<Violate>( &l.kind ) )
    {
        out = "not " + v->agent + ": " + v->proposition;
        if ( v->refinement )
            out += " / " + to_string( *v->refinement );
    }
    else
    {
        const auto& e = std::get<Exercise>( l.kind );
        out = "exercise " + e.agent + ": " + to_string( e.grant );
    }
    if ( !l.qualifier.is_none() )
        out += " " + to_string( l.qualifier );
    return out;
}

inline std::string to_string( const Consequent& c )
{
    if ( const auto* a = std::get_if<Add>( &c ) )
        return to_string( a->atom );
    if ( const auto* r = std::get_if<Remove>( &c ) )
        return "not " + to_string( r->atom );
    return std::string{ "terminated " } + to_string( std::get<Terminate>( c ).cls );
}

inline std::string to_string( const ContractState& s )
{
    if ( s.is_terminated() )
        return std::string{ "terminated " } + to_string( *s.termination() );
    std::string out = "{";
    bool first = true;
    for ( const auto& a : s.norms() )
    {
        if ( !first )
            out += ", ";
        first = false;
        out += to_string( a );
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// State algebra

// Order-insensitive identity of a state. Atom texts are unambiguous (names
// are identifiers), so sorting and joining them is injective.
inline std::string canonical_key( const ContractState& state )
{
    if ( state.is_terminated() )
        return std::string{ "terminated(" } + to_string( *state.termination() ) + ")";
    std::vector<std::string> parts;
    parts.reserve( state.norms().size() );
    for ( const auto& a : state.norms() )
        parts.push_back( to_string( a ) );
    std::sort( parts.begin(), parts.end() );
    std::string key = "{";
    for ( std::size_t i = 0; i < parts.size(); ++i )
    {
        if ( i > 0 )
            key += "; ";
        key += parts[ i ];
    }
    return key + "}";
}

inline bool holds( const ContractState& state, const NormAtom& atom )
{
    return !state.is_terminated() && state.norms().contains( atom );
}

// Fires a set of rules against an active state. A Terminate consequent
// dominates everything else; two different classes are a conflict.
inline ContractState apply_effects( const ContractState& state, std::span<const Rule> fired, FramePolicy policy )
{
    if ( state.is_terminated() )
        throw error( errc::precondition, "cannot apply effects to a terminated state" );

    std::optional<TerminationClass> terminal;
    for ( const auto& rule : fired )
    {
        if ( !holds( state, rule.guard ) )
            throw error( errc::precondition, "rule '" + rule.id + "' fired but its guard does not hold" );
        if ( auto cls = rule.terminates() )
        {
            if ( terminal && *terminal != *cls )
                throw error( errc::conflict, "fired rules terminate with conflicting classes" );
            terminal = cls;
        }
    }
    if ( terminal )
        return ContractState::terminated( *terminal );

    std::set<NormAtom> next;
    if ( policy == FramePolicy::persist_unmentioned )
    {
        next = state.norms();
        for ( const auto& rule : fired )
        {
            next.erase( rule.guard );
            for ( const auto& c : rule.consequents )
                if ( const auto* r = std::get_if<Remove>( &c ) )
                    next.erase( r->atom );
        }
    }
    for ( const auto& rule : fired )
        for ( const auto& c : rule.consequents )
            if ( const auto* a = std::get_if<Add>( &c ) )
                next.insert( a->atom );
    return ContractState::active( std::move( next ) );
}

} // namespace pact
