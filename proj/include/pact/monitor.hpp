#pragma once

// Live contract-performance monitoring. A session holds the current state and
// clock; timestamped events are classified against the active obligations
// (conformance, timeliness, performer) and applied as transitions, and
// deadlines lapse as the clock moves past them.

#include "language.hpp"
#include "state_space.hpp"

#include <memory>

namespace pact
{

struct TransitionRecord
{
    Time at = 0;
    std::optional<Event> event; // empty for a deadline lapse
    TransitionLabel label;
    std::string before_key;
    std::string after_key;
    std::vector<NormAtom> activated;
    std::vector<NormAtom> discharged;

    [[nodiscard]] bool is_lapse() const { return !event.has_value(); }

    friend bool operator==( const TransitionRecord&, const TransitionRecord& ) = default;
};

struct ActiveNorm
{
    NormAtom atom;
    std::optional<Time> deadline; // absolute session time of the last admissible instant
};

struct Rejection
{
    Event event;
    errc code;
    std::string message;
};

// Relative deadline after which an obligation lapses: defined only when every
// fulfilment window is bounded above, and then the latest such bound.
inline std::optional<Time> lapse_deadline( const ContractSpec& spec, const Obligation& o )
{
    std::optional<Time> latest;
    for ( const auto& w : fulfilment_windows( spec, o ) )
    {
        const auto bound = w.upper_bound();
        if ( !bound )
            return std::nullopt;
        latest = std::max( latest.value_or( *bound ), *bound );
    }
    return latest;
}

// Classifies one performance event against one obligation and one fulfilment
// window. Returns nullopt when the event is about some other proposition.
inline std::optional<TransitionLabel> classify_event( const ContractSpec& spec, const Event& event,
                                                      const NormAtom& obligation, const TemporalQualifier& window )
{
    if ( !obligation.is_obligation() )
        throw error( errc::precondition, "can only classify events against obligations" );
    const auto* act = event.proposition();
    if ( !act )
        throw error( errc::precondition, "can only classify performance events" );
    const auto& o = obligation.as_obligation();
    if ( *act != o.proposition )
        return std::nullopt;
    const auto* prop = spec.find_proposition( o.proposition );
    if ( !prop )
        throw error( errc::precondition, "undeclared proposition '" + o.proposition + "'" );

    const bool conforming = event.attrs == prop->attrs;
    const bool timely = window.admits( event.at );
    const bool right_performer = event.actor == prop->expected_performer.value_or( o.bearer );
    if ( conforming && timely && right_performer )
        return TransitionLabel::fulfil( o.bearer, o.proposition, window );
    return TransitionLabel::violate( o.bearer, o.proposition,
                                     ViolationRefinement{ !conforming, !timely, !right_performer, false } );
}

inline TransitionRecord make_record( Time at, std::optional<Event> event, TransitionLabel label,
                                     const ContractState& before, const ContractState& after )
{
    TransitionRecord r{ at, std::move( event ), std::move( label ), canonical_key( before ), canonical_key( after ), {}, {} };
    for ( const auto& a : after.norms() )
        if ( !before.norms().contains( a ) )
            r.activated.push_back( a );
    for ( const auto& a : before.norms() )
        if ( !after.norms().contains( a ) )
            r.discharged.push_back( a );
    return r;
}

// Folds a log over the initial state, checking every step against its
// recorded keys. Throws corrupt_snapshot on the first inconsistency.
inline ContractState replay( const ContractSpec& spec, std::span<const TransitionRecord> log, Time epoch = 0 )
{
    ContractState state = initial_state( spec );
    Time clock = epoch;
    for ( std::size_t i = 0; i < log.size(); ++i )
    {
        const auto& r = log[ i ];
        const std::string where = "log record " + std::to_string( i );
        if ( r.at < clock )
            throw error( errc::corrupt_snapshot, where + ": time goes backwards" );
        if ( r.before_key != canonical_key( state ) )
            throw error( errc::corrupt_snapshot, where + ": before-state does not match replay" );
        if ( !admits( spec, state, r.label ) )
            throw error( errc::corrupt_snapshot, where + ": '" + to_string( r.label ) + "' is not enabled" );
        state = successor( spec, state, r.label );
        if ( r.after_key != canonical_key( state ) )
            throw error( errc::corrupt_snapshot, where + ": after-state does not match replay" );
        clock = r.at;
    }
    return state;
}

class Session
{
    std::shared_ptr<const ContractSpec> _spec;
    ContractState _state;
    Time _epoch = 0;
    Time _clock = 0;
    std::vector<TransitionRecord> _log;
    std::vector<Rejection> _rejections;

    void apply( Time at, std::optional<Event> event, const TransitionLabel& label )
    {
        auto next = successor( *_spec, _state, label );
        _log.push_back( make_record( at, std::move( event ), label, _state, next ) );
        _state = std::move( next );
        _clock = at;
    }

    // Fires every lapse whose deadline is strictly before `limit`, earliest
    // first, leaving `exempt` alone.
    void lapse_before( Time limit, const std::optional<NormAtom>& exempt )
    {
        while ( !_state.is_terminated() )
        {
            std::optional<std::pair<Time, Obligation>> due;
            for ( const auto& atom : _state.norms() )
            {
                if ( !atom.is_obligation() || ( exempt && atom == *exempt ) )
                    continue;
                const auto& o = atom.as_obligation();
                const auto rel = lapse_deadline( *_spec, o );
                if ( !rel || _epoch + *rel >= limit )
                    continue;
                const auto lapse = TransitionLabel::violate( o.bearer, o.proposition, ViolationRefinement::lapsed() );
                if ( !admits( *_spec, _state, lapse ) )
                    continue;
                if ( !due || _epoch + *rel < due->first )
                    due.emplace( _epoch + *rel, o );
            }
            if ( !due )
                return;
            const auto& o = due->second;
            apply( std::max( due->first + 1, _clock ), std::nullopt,
                   TransitionLabel::violate( o.bearer, o.proposition, ViolationRefinement::lapsed() ) );
        }
    }

    [[nodiscard]] std::optional<NormAtom> addressed_norm( const Event& event ) const
    {
        if ( const auto* g = event.grant() )
        {
            const NormAtom power{ Power{ event.actor, *g } };
            if ( holds( _state, power ) )
                return power;
            return std::nullopt;
        }
        std::optional<NormAtom> found;
        for ( const auto& atom : _state.norms() )
        {
            if ( !atom.is_obligation() || atom.as_obligation().proposition != *event.proposition() )
                continue;
            if ( atom.bearer() == event.actor )
                return atom;
            if ( !found )
                found = atom;
        }
        return found;
    }

    [[nodiscard]] TransitionLabel label_for( const Event& event, const NormAtom& norm ) const
    {
        if ( norm.is_power() )
            return TransitionLabel::exercise( norm.bearer(), norm.as_power().grant );
        Event relative = event;
        relative.at -= _epoch;
        std::optional<TransitionLabel> best;
        for ( const auto& window : fulfilment_windows( *_spec, norm.as_obligation() ) )
        {
            auto l = *classify_event( *_spec, relative, norm, window );
            if ( l.is_fulfil() )
                return l;
            auto flags = []( const TransitionLabel& x ) {
                const auto& r = *std::get<Violate>( x.kind ).refinement;
                return int{ r.nonconforming } + int{ r.late } + int{ r.wrong_performer };
            };
            if ( !best || flags( l ) < flags( *best ) )
                best = std::move( l );
        }
        return *best;
    }

    TransitionRecord submit_unchecked( const Event& event )
    {
        if ( event.is_tick() )
            throw error( errc::precondition, "clock ticks go through advance_clock" );
        if ( _state.is_terminated() )
            throw error( errc::terminal_state, "the contract has terminated (" + canonical_key( _state ) + ")" );
        if ( event.at < _clock )
            throw error( errc::stale_timestamp, "event at t=" + std::to_string( event.at ) +
                                                    " is before the session clock t=" + std::to_string( _clock ) );
        if ( const auto* p = event.proposition(); p && !_spec->find_proposition( *p ) )
            throw error( errc::unexpected_event, "unknown proposition '" + *p + "'" );

        auto target = addressed_norm( event );
        if ( !target )
            throw error( errc::unexpected_event, "no active norm matches " + to_event_line( event ) );
        lapse_before( event.at, target );
        if ( _state.is_terminated() )
            throw error( errc::terminal_state, "the contract terminated before t=" + std::to_string( event.at ) );
        if ( !holds( _state, *target ) )
            throw error( errc::unexpected_event, to_string( *target ) + " lapsed before t=" + std::to_string( event.at ) );

        const auto label = label_for( event, *target );
        if ( !admits( *_spec, _state, label ) )
            throw error( errc::unexpected_event, "'" + to_string( label ) + "' is not a possible transition here" );
        apply( event.at, event, label );
        return _log.back();
    }

public:
    Session( std::shared_ptr<const ContractSpec> spec, Time epoch )
            : _spec{ std::move( spec ) }, _state{ initial_state( *_spec ) }, _epoch{ epoch }, _clock{ epoch }
    {
    }

    // Rebuilds a session from a stored log, verifying it by replay.
    static Session restore( std::shared_ptr<const ContractSpec> spec, Time epoch, Time clock,
                            std::vector<TransitionRecord> log )
    {
        Session s{ std::move( spec ), epoch };
        s._state = replay( *s._spec, log, epoch );
        if ( !log.empty() && log.back().at > clock )
            throw error( errc::corrupt_snapshot, "session clock is behind its log" );
        if ( clock < epoch )
            throw error( errc::corrupt_snapshot, "session clock is before the epoch" );
        s._log = std::move( log );
        s._clock = clock;
        return s;
    }

    [[nodiscard]] const ContractSpec& spec() const { return *_spec; }
    [[nodiscard]] const std::shared_ptr<const ContractSpec>& spec_ptr() const { return _spec; }
    [[nodiscard]] const ContractState& state() const { return _state; }
    [[nodiscard]] Time clock() const { return _clock; }
    [[nodiscard]] Time epoch() const { return _epoch; }
    [[nodiscard]] const std::vector<TransitionRecord>& log() const { return _log; }
    [[nodiscard]] const std::vector<Rejection>& rejections() const { return _rejections; }

    // Applies one performance or power-exercise event. Deadlines that passed
    // before the event lapse first. On error nothing changes except the
    // rejection list.
    TransitionRecord submit_event( const Event& event )
    {
        Session draft = *this;
        try
        {
            auto record = draft.submit_unchecked( event );
            *this = std::move( draft );
            return record;
        }
        catch ( const error& e )
        {
            _rejections.push_back( { event, e.code(), e.what() } );
            throw;
        }
    }

    std::vector<TransitionRecord> advance_clock( Time to )
    {
        if ( to < _clock )
            throw error( errc::stale_timestamp, "cannot move the clock back from t=" + std::to_string( _clock ) +
                                                    " to t=" + std::to_string( to ) );
        const auto first = _log.size();
        lapse_before( to, std::nullopt );
        _clock = to;
        return { _log.begin() + static_cast<std::ptrdiff_t>( first ), _log.end() };
    }

    // Ticks advance the clock; anything else is submitted. Returns every
    // record appended, lapses included.
    std::vector<TransitionRecord> feed( const Event& event )
    {
        if ( _state.is_terminated() )
        {
            _rejections.push_back( { event, errc::terminal_state, "the contract has terminated" } );
            throw error( errc::terminal_state, "the contract has terminated (" + canonical_key( _state ) + ")" );
        }
        if ( event.is_tick() )
            return advance_clock( event.at );
        const auto first = _log.size();
        submit_event( event );
        return { _log.begin() + static_cast<std::ptrdiff_t>( first ), _log.end() };
    }

    [[nodiscard]] std::vector<ActiveNorm> active_norms() const
    {
        std::vector<ActiveNorm> out;
        for ( const auto& atom : _state.norms() )
        {
            ActiveNorm n{ atom, std::nullopt };
            if ( atom.is_obligation() )
                if ( auto d = lapse_deadline( *_spec, atom.as_obligation() ) )
                    n.deadline = _epoch + *d;
            out.push_back( std::move( n ) );
        }
        return out;
    }

    [[nodiscard]] std::vector<TransitionRecord> history() const { return _log; }
};

inline Session open_session( ContractSpec spec, Time epoch )
{
    if ( epoch < 0 )
        throw error( errc::precondition, "epoch must be non-negative" );
    for ( const auto& d : validate( spec ) )
        if ( d.severity == Severity::error )
            throw error( errc::invalid_spec, d.message );
    return Session{ std::make_shared<const ContractSpec>( std::move( spec ) ), epoch };
}

} // namespace pact
