#pragma once

// The .pact contract language: a line-oriented concrete syntax for norm
// rules, plus the .events replay format that shares its lexer.
//
//   contract pizza
//   agents s, p
//   proposition alpha "pizza delivered" by s attrs{size="large", qty="1"}
//   initially O(s, alpha)
//   rule r1: O(s, alpha) -[ s: alpha @before(30) ]-> O(p, beta)
//   rule r2: O(s, alpha) -[ not s: alpha / nonconforming+late ]-> not O(p, beta), O(s, phi)
//   rule r3: POW(p, terminated unhappy) -[ exercise p: terminated unhappy ]-> terminated unhappy

#include "norm.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace pact
{

enum class Severity
{
    error,
    warning,
};

struct Diagnostic
{
    Severity severity = Severity::error;
    std::string message;
    SourceSpan span{};
};

inline std::string to_string( const Diagnostic& d )
{
    std::ostringstream out;
    out << d.span.line << ":" << d.span.col_start << "-" << d.span.col_end << ": "
        << ( d.severity == Severity::error ? "error" : "warning" ) << ": " << d.message;
    return out.str();
}

inline bool has_errors( const std::vector<Diagnostic>& ds )
{
    return std::any_of( ds.begin(), ds.end(), []( const Diagnostic& d ) { return d.severity == Severity::error; } );
}

// Either a value or at least one error diagnostic, never both.
template <typename T>
class Parsed
{
    std::variant<T, std::vector<Diagnostic>> _value;

public:
    Parsed( T value ) : _value{ std::move( value ) } {}
    Parsed( std::vector<Diagnostic> diagnostics ) : _value{ std::move( diagnostics ) } {}

    [[nodiscard]] bool ok() const { return _value.index() == 0; }
    [[nodiscard]] const T& value() const { return std::get<0>( _value ); }
    [[nodiscard]] T& value() { return std::get<0>( _value ); }

    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const
    {
        static const std::vector<Diagnostic> none;
        return ok() ? none : std::get<1>( _value );
    }
};

namespace detail
{

enum class tok
{
    ident,
    number,
    string,
    arrow_open,  // -[
    arrow_close, // ]->
    punct,
};

struct Token
{
    tok kind;
    std::string text;
    int col_start;
    int col_end;
};

struct syntax_failure
{
    std::string message;
    SourceSpan span;
};

inline bool is_ident_start( char c ) { return std::isalpha( static_cast<unsigned char>( c ) ) || c == '_'; }
inline bool is_ident_char( char c ) { return std::isalnum( static_cast<unsigned char>( c ) ) || c == '_'; }
inline bool is_digit( char c ) { return c >= '0' && c <= '9'; }

inline std::vector<Token> tokenize( std::string_view line, int line_no )
{
    std::vector<Token> out;
    std::size_t i = 0;
    auto col = [ & ]( std::size_t pos ) { return static_cast<int>( pos ) + 1; };
    while ( i < line.size() )
    {
        const char c = line[ i ];
        if ( c == ' ' || c == '\t' || c == '\r' )
        {
            ++i;
            continue;
        }
        if ( c == '#' )
            break;
        const std::size_t start = i;
        if ( is_ident_start( c ) )
        {
            while ( i < line.size() && is_ident_char( line[ i ] ) )
                ++i;
            out.push_back( { tok::ident, std::string{ line.substr( start, i - start ) }, col( start ), col( i - 1 ) } );
        }
        else if ( is_digit( c ) || ( c == '-' && i + 1 < line.size() && is_digit( line[ i + 1 ] ) ) )
        {
            ++i;
            while ( i < line.size() && ( is_digit( line[ i ] ) || line[ i ] == '.' ) )
                ++i;
            out.push_back( { tok::number, std::string{ line.substr( start, i - start ) }, col( start ), col( i - 1 ) } );
        }
        else if ( c == '"' )
        {
            std::string text;
            ++i;
            bool closed = false;
            while ( i < line.size() )
            {
                if ( line[ i ] == '\\' && i + 1 < line.size() )
                {
                    text += line[ i + 1 ];
                    i += 2;
                    continue;
                }
                if ( line[ i ] == '"' )
                {
                    closed = true;
                    ++i;
                    break;
                }
                text += line[ i++ ];
            }
            if ( !closed )
                throw syntax_failure{ "unterminated string", { line_no, col( start ), col( line.size() - 1 ) } };
            out.push_back( { tok::string, std::move( text ), col( start ), col( i - 1 ) } );
        }
        else if ( c == '-' && i + 1 < line.size() && line[ i + 1 ] == '[' )
        {
            i += 2;
            out.push_back( { tok::arrow_open, "-[", col( start ), col( i - 1 ) } );
        }
        else if ( c == ']' && line.substr( i, 3 ) == "]->" )
        {
            i += 3;
            out.push_back( { tok::arrow_close, "]->", col( start ), col( i - 1 ) } );
        }
        else if ( std::string_view{ "(),:={}/+@" }.find( c ) != std::string_view::npos )
        {
            ++i;
            out.push_back( { tok::punct, std::string( 1, c ), col( start ), col( start ) } );
        }
        else
        {
            throw syntax_failure{ "unexpected character", { line_no, col( start ), col( start ) } };
        }
    }
    return out;
}

inline bool is_keyword( std::string_view word )
{
    static const char* const keywords[] = { "contract", "agents", "proposition", "initially", "rule",
                                            "terminated", "happy", "unhappy", "O", "POW", "exercise",
                                            "not", "by", "attrs", "option", "tick" };
    for ( const char* k : keywords )
        if ( word == k )
            return true;
    return false;
}

// A name used somewhere that must resolve to a declaration.
struct Reference
{
    enum class Kind
    {
        agent,
        proposition,
    } kind;
    std::string name;
    SourceSpan span;
};

class Cursor
{
    const std::vector<Token>& _tokens;
    std::size_t _pos = 0;
    int _line;
    int _line_end;

public:
    std::vector<Reference>* refs = nullptr;

    Cursor( const std::vector<Token>& tokens, int line, int line_end )
            : _tokens{ tokens }, _line{ line }, _line_end{ line_end }
    {
    }

    [[nodiscard]] bool done() const { return _pos >= _tokens.size(); }
    [[nodiscard]] const Token* peek( std::size_t ahead = 0 ) const
    {
        return _pos + ahead < _tokens.size() ? &_tokens[ _pos + ahead ] : nullptr;
    }

    [[nodiscard]] SourceSpan span_of( const Token& t ) const { return { _line, t.col_start, t.col_end }; }

    [[nodiscard]] SourceSpan here() const
    {
        if ( const Token* t = peek() )
            return span_of( *t );
        return { _line, _line_end, _line_end };
    }

    [[noreturn]] void fail( const std::string& message ) const { throw syntax_failure{ message, here() }; }

    [[nodiscard]] bool at_punct( char c ) const
    {
        const Token* t = peek();
        return t && t->kind == tok::punct && t->text[ 0 ] == c;
    }

    [[nodiscard]] bool at_word( std::string_view w ) const
    {
        const Token* t = peek();
        return t && t->kind == tok::ident && t->text == w;
    }

    const Token& next()
    {
        if ( done() )
            fail( "unexpected end of line" );
        return _tokens[ _pos++ ];
    }

    void expect_punct( char c )
    {
        if ( !at_punct( c ) )
            fail( std::string{ "expected '" } + c + "'" );
        ++_pos;
    }

    void expect_word( std::string_view w )
    {
        if ( !at_word( w ) )
            fail( "expected '" + std::string{ w } + "'" );
        ++_pos;
    }

    void expect_kind( tok k, const char* what )
    {
        const Token* t = peek();
        if ( !t || t->kind != k )
            fail( std::string{ "expected " } + what );
        ++_pos;
    }

    bool accept_punct( char c )
    {
        if ( !at_punct( c ) )
            return false;
        ++_pos;
        return true;
    }

    bool accept_word( std::string_view w )
    {
        if ( !at_word( w ) )
            return false;
        ++_pos;
        return true;
    }

    // A non-keyword identifier.
    std::pair<std::string, SourceSpan> identifier( const char* what )
    {
        const Token* t = peek();
        if ( !t || t->kind != tok::ident )
            fail( std::string{ "expected " } + what );
        if ( is_keyword( t->text ) )
            fail( "'" + t->text + "' is a keyword and cannot be used as " + what );
        ++_pos;
        return { t->text, span_of( *t ) };
    }

    std::string agent()
    {
        auto [ name, span ] = identifier( "an agent name" );
        if ( refs )
            refs->push_back( { Reference::Kind::agent, name, span } );
        return name;
    }

    std::string proposition()
    {
        auto [ name, span ] = identifier( "a proposition name" );
        if ( refs )
            refs->push_back( { Reference::Kind::proposition, name, span } );
        return name;
    }

    Time integer()
    {
        const Token* t = peek();
        if ( !t || t->kind != tok::number )
            fail( "expected an integer" );
        if ( t->text.find( '.' ) != std::string::npos || t->text[ 0 ] == '-' )
            fail( "expected a non-negative integer" );
        if ( t->text.size() > 15 )
            fail( "integer out of range" );
        ++_pos;
        return std::stoll( t->text );
    }

    void end()
    {
        if ( !done() )
            fail( "unexpected '" + peek()->text + "'" );
    }
};

inline TerminationClass termination_class( Cursor& in )
{
    if ( in.accept_word( "happy" ) )
        return TerminationClass::happy;
    if ( in.accept_word( "unhappy" ) )
        return TerminationClass::unhappy;
    in.fail( "expected 'happy' or 'unhappy'" );
}

inline Obligation obligation_body( Cursor& in )
{
    in.expect_punct( '(' );
    std::string bearer = in.agent();
    in.expect_punct( ',' );
    std::string prop = in.proposition();
    in.expect_punct( ')' );
    return { std::move( bearer ), std::move( prop ) };
}

inline PowerGrant grant( Cursor& in )
{
    if ( in.accept_word( "terminated" ) )
        return Termination{ termination_class( in ) };
    if ( in.accept_word( "O" ) )
        return obligation_body( in );
    in.fail( "expected an obligation O(...) or 'terminated'" );
}

inline NormAtom atom( Cursor& in )
{
    if ( in.accept_word( "O" ) )
        return obligation_body( in );
    if ( in.accept_word( "POW" ) )
    {
        in.expect_punct( '(' );
        std::string bearer = in.agent();
        in.expect_punct( ',' );
        PowerGrant g = grant( in );
        in.expect_punct( ')' );
        return Power{ std::move( bearer ), std::move( g ) };
    }
    if ( in.at_word( "terminated" ) )
        in.fail( "a terminated construct is not a norm atom" );
    in.fail( "expected a norm atom O(...) or POW(...)" );
}

inline ViolationRefinement refinement( Cursor& in )
{
    ViolationRefinement r;
    if ( in.accept_word( "lapse" ) )
    {
        r.lapse = true;
        if ( in.at_punct( '+' ) )
            in.fail( "'lapse' cannot be combined with other dimensions" );
        return r;
    }
    do
    {
        const Token* t = in.peek();
        if ( !t || t->kind != tok::ident )
            in.fail( "expected a violation dimension (nonconforming, late, wrong_performer, lapse)" );
        bool* flag = nullptr;
        if ( t->text == "nonconforming" )
            flag = &r.nonconforming;
        else if ( t->text == "late" )
            flag = &r.late;
        else if ( t->text == "wrong_performer" )
            flag = &r.wrong_performer;
        else if ( t->text == "lapse" )
            in.fail( "'lapse' cannot be combined with other dimensions" );
        else
            in.fail( "unknown violation dimension '" + t->text + "'" );
        if ( *flag )
            in.fail( "duplicate violation dimension '" + t->text + "'" );
        *flag = true;
        in.next();
    } while ( in.accept_punct( '+' ) );
    return r;
}

inline TemporalQualifier qualifier( Cursor& in )
{
    if ( !in.accept_punct( '@' ) )
        return {};
    if ( in.accept_word( "before" ) )
    {
        in.expect_punct( '(' );
        Time t = in.integer();
        in.expect_punct( ')' );
        return TemporalQualifier::before( t );
    }
    if ( in.accept_word( "after" ) )
    {
        in.expect_punct( '(' );
        Time t = in.integer();
        in.expect_punct( ')' );
        return TemporalQualifier::after( t );
    }
    if ( in.accept_word( "between" ) )
    {
        in.expect_punct( '(' );
        Time t1 = in.integer();
        in.expect_punct( ',' );
        Time t2 = in.integer();
        in.expect_punct( ')' );
        return TemporalQualifier::between( t1, t2 );
    }
    in.fail( "expected before, after or between after '@'" );
}

inline TransitionLabel label( Cursor& in )
{
    if ( in.accept_word( "exercise" ) )
    {
        std::string agent = in.agent();
        in.expect_punct( ':' );
        return TransitionLabel::exercise( std::move( agent ), grant( in ) );
    }
    const bool negated = in.accept_word( "not" );
    std::string agent = in.agent();
    in.expect_punct( ':' );
    std::string prop = in.proposition();
    if ( negated )
    {
        std::optional<ViolationRefinement> r;
        if ( in.accept_punct( '/' ) )
            r = refinement( in );
        return TransitionLabel::violate( std::move( agent ), std::move( prop ), r, qualifier( in ) );
    }
    if ( in.at_punct( '/' ) )
        in.fail( "only violation labels take a refinement" );
    return TransitionLabel::fulfil( std::move( agent ), std::move( prop ), qualifier( in ) );
}

inline Consequent consequent( Cursor& in )
{
    if ( in.accept_word( "terminated" ) )
        return Terminate{ termination_class( in ) };
    if ( in.accept_word( "not" ) )
        return Remove{ atom( in ) };
    return Add{ atom( in ) };
}

inline AttrValue attr_value( Cursor& in )
{
    const Token* t = in.peek();
    if ( t && t->kind == tok::string )
    {
        in.next();
        return t->text;
    }
    if ( t && t->kind == tok::number )
    {
        auto d = Decimal::parse( t->text );
        if ( !d )
            in.fail( "malformed decimal '" + t->text + "'" );
        in.next();
        return *d;
    }
    in.fail( "expected a quoted string or a decimal amount" );
}

inline Attrs attrs_block( Cursor& in )
{
    in.expect_word( "attrs" );
    in.expect_punct( '{' );
    Attrs out;
    if ( in.accept_punct( '}' ) )
        return out;
    do
    {
        const Token* t = in.peek();
        if ( !t || t->kind != tok::ident )
            in.fail( "expected an attribute key" );
        const SourceSpan key_span = in.span_of( *t );
        std::string key = t->text;
        in.next();
        in.expect_punct( '=' );
        AttrValue v = attr_value( in );
        if ( !out.emplace( key, std::move( v ) ).second )
            throw syntax_failure{ "duplicate attribute key '" + key + "'", key_span };
    } while ( in.accept_punct( ',' ) );
    in.expect_punct( '}' );
    return out;
}

inline std::vector<std::string_view> split_lines( std::string_view source )
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while ( start <= source.size() )
    {
        const std::size_t nl = source.find( '\n', start );
        if ( nl == std::string_view::npos )
        {
            lines.push_back( source.substr( start ) );
            break;
        }
        lines.push_back( source.substr( start, nl - start ) );
        start = nl + 1;
    }
    return lines;
}

inline int line_end_col( std::string_view line ) { return std::max( 1, static_cast<int>( line.size() ) ); }

// Runs `body` on a single standalone line of text.
template <typename T, typename F>
Parsed<T> parse_fragment( std::string_view text, F body )
{
    try
    {
        if ( text.find( '\n' ) != std::string_view::npos )
            return std::vector<Diagnostic>{ { Severity::error, "expected a single line", { 1, 1, 1 } } };
        const auto tokens = tokenize( text, 1 );
        Cursor in{ tokens, 1, line_end_col( text ) };
        T value = body( in );
        in.end();
        return value;
    }
    catch ( const syntax_failure& f )
    {
        return std::vector<Diagnostic>{ { Severity::error, f.message, f.span } };
    }
}

} // namespace detail

inline Parsed<NormAtom> parse_atom( std::string_view text )
{
    return detail::parse_fragment<NormAtom>( text, []( detail::Cursor& in ) { return detail::atom( in ); } );
}

inline Parsed<PowerGrant> parse_grant( std::string_view text )
{
    return detail::parse_fragment<PowerGrant>( text, []( detail::Cursor& in ) { return detail::grant( in ); } );
}

inline Parsed<TransitionLabel> parse_label( std::string_view text )
{
    return detail::parse_fragment<TransitionLabel>( text, []( detail::Cursor& in ) { return detail::label( in ); } );
}

inline Parsed<Attrs> parse_attrs( std::string_view text )
{
    return detail::parse_fragment<Attrs>( text, []( detail::Cursor& in ) { return detail::attrs_block( in ); } );
}

// ---------------------------------------------------------------------------

inline Parsed<ContractSpec> parse( std::string_view source )
{
    using namespace detail;

    ContractSpec spec;
    std::vector<Diagnostic> diags;
    std::vector<Reference> refs;
    std::map<std::string, SourceSpan> rule_ids;
    bool have_contract = false;
    bool have_options[ 3 ] = { false, false, false };

    const auto lines = split_lines( source );
    for ( std::size_t li = 0; li < lines.size(); ++li )
    {
        const int line_no = static_cast<int>( li ) + 1;
        const std::string_view line = lines[ li ];
        try
        {
            const auto tokens = tokenize( line, line_no );
            if ( tokens.empty() )
                continue;
            Cursor in{ tokens, line_no, line_end_col( line ) };
            // References are only kept once the whole line parsed cleanly.
            std::vector<Reference> line_refs;
            in.refs = &line_refs;
            const Token& head = tokens.front();
            const SourceSpan head_span = in.span_of( head );

            if ( head.kind != tok::ident )
                in.fail( "expected a declaration keyword" );

            if ( head.text == "contract" )
            {
                in.next();
                auto [ name, span ] = in.identifier( "a contract name" );
                in.end();
                if ( have_contract )
                    throw syntax_failure{ "duplicate contract declaration", head_span };
                have_contract = true;
                spec.name = name;
            }
            else if ( head.text == "agents" )
            {
                in.next();
                do
                {
                    auto [ name, span ] = in.identifier( "an agent name" );
                    if ( spec.has_agent( name ) )
                        throw syntax_failure{ "duplicate agent '" + name + "'", span };
                    spec.agents.push_back( name );
                } while ( in.accept_punct( ',' ) );
                in.end();
            }
            else if ( head.text == "proposition" )
            {
                in.next();
                Proposition p;
                auto [ name, span ] = in.identifier( "a proposition name" );
                p.name = name;
                p.where = span;
                const Token* t = in.peek();
                if ( t && t->kind == tok::string )
                {
                    p.display = t->text;
                    in.next();
                }
                if ( in.accept_word( "by" ) )
                    p.expected_performer = in.agent();
                if ( in.at_word( "attrs" ) )
                    p.attrs = attrs_block( in );
                in.end();
                if ( spec.find_proposition( name ) )
                    throw syntax_failure{ "duplicate proposition '" + name + "'", span };
                spec.propositions.push_back( std::move( p ) );
            }
            else if ( head.text == "initially" )
            {
                in.next();
                do
                {
                    const SourceSpan at = in.here();
                    NormAtom a = atom( in );
                    if ( std::find( spec.initial.begin(), spec.initial.end(), a ) != spec.initial.end() )
                        throw syntax_failure{ "duplicate initial norm " + to_string( a ), at };
                    spec.initial.push_back( std::move( a ) );
                } while ( in.accept_punct( ',' ) );
                in.end();
            }
            else if ( head.text == "option" )
            {
                in.next();
                const Token& key = in.next();
                in.expect_punct( '=' );
                const Token* value = in.peek();
                if ( !value )
                    in.fail( "expected an option value" );
                int slot = -1;
                if ( key.text == "frame_policy" )
                {
                    slot = 0;
                    if ( value->text == "discharge" )
                        spec.config.frame_policy = FramePolicy::discharge_unmentioned;
                    else if ( value->text == "persist" )
                        spec.config.frame_policy = FramePolicy::persist_unmentioned;
                    else
                        in.fail( "frame_policy must be 'discharge' or 'persist'" );
                }
                else if ( key.text == "violation_axiom" )
                {
                    slot = 1;
                    if ( value->text == "on" )
                        spec.config.violation_axiom = true;
                    else if ( value->text == "off" )
                        spec.config.violation_axiom = false;
                    else
                        in.fail( "violation_axiom must be 'on' or 'off'" );
                }
                else if ( key.text == "state_bound" )
                {
                    slot = 2;
                    const Time bound = in.integer();
                    if ( bound < 1 )
                        throw syntax_failure{ "state_bound must be at least 1", in.span_of( *value ) };
                    spec.config.state_bound = static_cast<std::size_t>( bound );
                }
                else
                    throw syntax_failure{ "unknown option '" + key.text + "'", in.span_of( key ) };
                if ( slot != 2 )
                    in.next();
                in.end();
                if ( have_options[ slot ] )
                    throw syntax_failure{ "option '" + key.text + "' set twice", in.span_of( key ) };
                have_options[ slot ] = true;
            }
            else if ( head.text == "rule" )
            {
                in.next();
                Rule r;
                auto [ id, id_span ] = in.identifier( "a rule id" );
                r.id = id;
                r.where = id_span;
                in.expect_punct( ':' );
                if ( in.at_word( "terminated" ) )
                    in.fail( "a rule guard cannot be a terminated construct" );
                r.guard = atom( in );
                in.expect_kind( tok::arrow_open, "'-['" );
                r.label = label( in );
                in.expect_kind( tok::arrow_close, "']->'" );
                do
                {
                    const SourceSpan at = in.here();
                    r.consequents.push_back( consequent( in ) );
                    if ( std::holds_alternative<Terminate>( r.consequents.back() ) && r.consequents.size() > 1 )
                        throw syntax_failure{ "'terminated' must be the sole consequent", at };
                } while ( in.accept_punct( ',' ) );
                in.end();
                if ( r.terminates() && r.consequents.size() > 1 )
                    throw syntax_failure{ "'terminated' must be the sole consequent", id_span };
                if ( !rule_ids.emplace( id, id_span ).second )
                    throw syntax_failure{ "duplicate rule id '" + id + "'", id_span };
                spec.rules.push_back( std::move( r ) );
            }
            else
            {
                throw syntax_failure{ "unknown declaration '" + head.text + "'", head_span };
            }
            refs.insert( refs.end(), line_refs.begin(), line_refs.end() );
        }
        catch ( const syntax_failure& f )
        {
            diags.push_back( { Severity::error, f.message, f.span } );
        }
    }

    if ( !have_contract )
        diags.push_back( { Severity::error, "no contract declaration", { 1, 1, 1 } } );

    for ( const auto& ref : refs )
    {
        if ( ref.kind == Reference::Kind::agent && !spec.has_agent( ref.name ) )
            diags.push_back( { Severity::error, "undeclared agent '" + ref.name + "'", ref.span } );
        if ( ref.kind == Reference::Kind::proposition && !spec.find_proposition( ref.name ) )
            diags.push_back( { Severity::error, "undeclared proposition '" + ref.name + "'", ref.span } );
    }

    if ( !diags.empty() )
    {
        std::stable_sort( diags.begin(), diags.end(),
                          []( const Diagnostic& a, const Diagnostic& b ) { return a.span.line < b.span.line; } );
        return diags;
    }
    return spec;
}

// ---------------------------------------------------------------------------

namespace detail
{

inline void collect_props( const PowerGrant& g, std::set<std::string>& out )
{
    if ( const auto* o = std::get_if<Obligation>( &g ) )
        out.insert( o->proposition );
}

inline void collect_props( const NormAtom& a, std::set<std::string>& out )
{
    if ( a.is_obligation() )
        out.insert( a.as_obligation().proposition );
    else
        collect_props( a.as_power().grant, out );
}

inline void collect_props( const TransitionLabel& l, std::set<std::string>& out )
{
    if ( auto s = l.subject() )
        out.insert( s->proposition );
    else
        collect_props( std::get<Exercise>( l.kind ).grant, out );
}

} // namespace detail

// Semantic checks beyond the grammar. Errors make a spec unusable by the
// engine; warnings flag probable drafting mistakes.
inline std::vector<Diagnostic> validate( const ContractSpec& spec )
{
    std::vector<Diagnostic> out;
    auto err = [ &out ]( std::string msg, SourceSpan at ) { out.push_back( { Severity::error, std::move( msg ), at } ); };
    auto warn = [ &out ]( std::string msg, SourceSpan at ) {
        out.push_back( { Severity::warning, std::move( msg ), at } );
    };

    if ( spec.name.empty() )
        err( "no contract declaration", {} );
    if ( spec.config.state_bound < 1 )
        err( "state_bound must be at least 1", {} );

    auto check_agent = [ & ]( const AgentId& a, SourceSpan at ) {
        if ( !spec.has_agent( a ) )
            err( "undeclared agent '" + a + "'", at );
    };
    auto check_prop = [ & ]( const std::string& p, SourceSpan at ) {
        if ( !spec.find_proposition( p ) )
            err( "undeclared proposition '" + p + "'", at );
    };
    auto check_grant = [ & ]( const PowerGrant& g, SourceSpan at ) {
        if ( const auto* o = std::get_if<Obligation>( &g ) )
        {
            check_agent( o->bearer, at );
            check_prop( o->proposition, at );
        }
    };
    auto check_atom = [ & ]( const NormAtom& a, SourceSpan at ) {
        check_agent( a.bearer(), at );
        if ( a.is_obligation() )
            check_prop( a.as_obligation().proposition, at );
        else
            check_grant( a.as_power().grant, at );
    };

    {
        std::set<AgentId> seen;
        for ( const auto& a : spec.agents )
            if ( !seen.insert( a ).second )
                err( "duplicate agent '" + a + "'", {} );
    }
    {
        std::set<std::string> seen;
        for ( const auto& p : spec.propositions )
        {
            if ( !seen.insert( p.name ).second )
                err( "duplicate proposition '" + p.name + "'", p.where );
            if ( p.expected_performer )
                check_agent( *p.expected_performer, p.where );
        }
    }
    for ( const auto& a : spec.initial )
        check_atom( a, {} );

    std::set<std::string> ids;
    for ( const auto& r : spec.rules )
    {
        if ( !ids.insert( r.id ).second )
            err( "duplicate rule id '" + r.id + "'", r.where );
        check_atom( r.guard, r.where );
        check_agent( r.label.agent(), r.where );
        if ( auto s = r.label.subject() )
            check_prop( s->proposition, r.where );
        else
            check_grant( std::get<Exercise>( r.label.kind ).grant, r.where );
        if ( !r.label.qualifier.well_formed() )
            err( "rule '" + r.id + "': empty interval " + to_string( r.label.qualifier ), r.where );
        if ( const auto* v = std::get_if<Violate>( &r.label.kind ); v && v->refinement && !v->refinement->valid() )
            err( "rule '" + r.id + "': invalid violation refinement", r.where );
        if ( r.label.is_exercise() && !r.label.qualifier.is_none() )
            err( "rule '" + r.id + "': power exercise labels take no temporal qualifier", r.where );
        if ( r.consequents.empty() )
            err( "rule '" + r.id + "' has no consequents", r.where );
        if ( r.terminates() && r.consequents.size() > 1 )
            err( "rule '" + r.id + "': 'terminated' must be the sole consequent", r.where );
        for ( const auto& c : r.consequents )
        {
            if ( const auto* a = std::get_if<Add>( &c ) )
                check_atom( a->atom, r.where );
            else if ( const auto* rm = std::get_if<Remove>( &c ) )
                check_atom( rm->atom, r.where );
        }

        // Exercising a power always brings its grant into force, so a rule
        // on the same label must not contradict that.
        if ( const auto* e = std::get_if<Exercise>( &r.label.kind ) )
        {
            const auto cls = r.terminates();
            if ( const auto* t = std::get_if<Termination>( &e->grant ) )
            {
                if ( cls && *cls != t->cls )
                    err( "rule '" + r.id + "' terminates " + to_string( *cls ) + " on a power to terminate " +
                             to_string( t->cls ),
                         r.where );
            }
            else
            {
                const NormAtom granted{ std::get<Obligation>( e->grant ) };
                if ( cls )
                    err( "rule '" + r.id + "' terminates on exercise of a power that grants " + to_string( granted ),
                         r.where );
                for ( const auto& c : r.consequents )
                    if ( const auto* rm = std::get_if<Remove>( &c ); rm && rm->atom == granted )
                        err( "rule '" + r.id + "' removes the norm its power exercise grants", r.where );
            }
        }
    }

    for ( std::size_t i = 0; i < spec.rules.size(); ++i )
        for ( std::size_t j = i + 1; j < spec.rules.size(); ++j )
        {
            const Rule& a = spec.rules[ i ];
            const Rule& b = spec.rules[ j ];
            if ( !( a.label == b.label ) )
                continue;
            const auto ca = a.terminates();
            const auto cb = b.terminates();
            if ( !ca || !cb || *ca == *cb )
                continue;
            if ( a.guard == b.guard )
                err( "rules '" + a.id + "' and '" + b.id + "' terminate with conflicting classes", b.where );
            else
                warn( "rules '" + a.id + "' and '" + b.id +
                          "' terminate with conflicting classes if both guards hold",
                      b.where );
        }

    // Propositions never mentioned by any rule.
    std::set<std::string> used;
    for ( const auto& r : spec.rules )
    {
        detail::collect_props( r.guard, used );
        detail::collect_props( r.label, used );
        for ( const auto& c : r.consequents )
        {
            if ( const auto* a = std::get_if<Add>( &c ) )
                detail::collect_props( a->atom, used );
            else if ( const auto* rm = std::get_if<Remove>( &c ) )
                detail::collect_props( rm->atom, used );
        }
    }
    for ( const auto& p : spec.propositions )
        if ( !used.contains( p.name ) )
            warn( "proposition '" + p.name + "' is not used by any rule", p.where );

    // Shallow syntactic reachability: an atom is reachable if it is initial,
    // granted by a reachable power, or added by a rule with a reachable guard.
    std::set<NormAtom> reach( spec.initial.begin(), spec.initial.end() );
    for ( bool grew = true; grew; )
    {
        grew = false;
        std::vector<NormAtom> found;
        for ( const auto& a : reach )
            if ( a.is_power() )
                if ( const auto* o = std::get_if<Obligation>( &a.as_power().grant ) )
                    found.emplace_back( *o );
        for ( const auto& r : spec.rules )
            if ( reach.contains( r.guard ) )
                for ( const auto& c : r.consequents )
                    if ( const auto* a = std::get_if<Add>( &c ) )
                        found.push_back( a->atom );
        for ( auto& a : found )
            grew |= reach.insert( std::move( a ) ).second;
    }
    for ( const auto& r : spec.rules )
        if ( !reach.contains( r.guard ) )
            warn( "rule '" + r.id + "': guard " + to_string( r.guard ) + " is unreachable from the initial state",
                  r.where );

    return out;
}

// parse followed by validate; the diagnostics of whichever stage reported.
inline std::vector<Diagnostic> check( std::string_view source )
{
    auto parsed = parse( source );
    if ( !parsed.ok() )
        return parsed.diagnostics();
    return validate( parsed.value() );
}

inline std::string pretty_print( const ContractSpec& spec )
{
    std::ostringstream out;
    out << "contract " << spec.name << "\n";
    if ( !spec.agents.empty() )
    {
        out << "agents ";
        for ( std::size_t i = 0; i < spec.agents.size(); ++i )
            out << ( i ? ", " : "" ) << spec.agents[ i ];
        out << "\n";
    }
    const EngineConfig defaults{};
    if ( spec.config.frame_policy != defaults.frame_policy )
        out << "option frame_policy = "
            << ( spec.config.frame_policy == FramePolicy::persist_unmentioned ? "persist" : "discharge" ) << "\n";
    if ( spec.config.violation_axiom != defaults.violation_axiom )
        out << "option violation_axiom = " << ( spec.config.violation_axiom ? "on" : "off" ) << "\n";
    if ( spec.config.state_bound != defaults.state_bound )
        out << "option state_bound = " << spec.config.state_bound << "\n";

    if ( !spec.propositions.empty() )
        out << "\n";
    for ( const auto& p : spec.propositions )
    {
        out << "proposition " << p.name;
        if ( !p.display.empty() )
            out << " " << quote( p.display );
        if ( p.expected_performer )
            out << " by " << *p.expected_performer;
        if ( !p.attrs.empty() )
            out << " " << to_string( p.attrs );
        out << "\n";
    }
    if ( !spec.initial.empty() )
    {
        out << "\ninitially ";
        for ( std::size_t i = 0; i < spec.initial.size(); ++i )
            out << ( i ? ", " : "" ) << to_string( spec.initial[ i ] );
        out << "\n";
    }
    if ( !spec.rules.empty() )
        out << "\n";
    for ( const auto& r : spec.rules )
    {
        out << "rule " << r.id << ": " << to_string( r.guard ) << " -[ " << to_string( r.label ) << " ]-> ";
        for ( std::size_t i = 0; i < r.consequents.size(); ++i )
            out << ( i ? ", " : "" ) << to_string( r.consequents[ i ] );
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// .events replay files:
//   t=20 agent=s act=alpha attrs{size="large"}
//   t=31 tick
//   t=40 agent=p act=exercise(O(s, phi))

inline Parsed<Event> parse_event_line( std::string_view text )
{
    return detail::parse_fragment<Event>( text, []( detail::Cursor& in ) {
        in.expect_word( "t" );
        in.expect_punct( '=' );
        Event e;
        e.at = in.integer();
        if ( in.accept_word( "tick" ) )
        {
            e.act = Tick{};
            return e;
        }
        in.expect_word( "agent" );
        in.expect_punct( '=' );
        e.actor = in.identifier( "an agent name" ).first;
        in.expect_word( "act" );
        in.expect_punct( '=' );
        if ( in.accept_word( "exercise" ) )
        {
            in.expect_punct( '(' );
            e.act = detail::grant( in );
            in.expect_punct( ')' );
            return e;
        }
        e.act = in.identifier( "a proposition name" ).first;
        if ( in.at_word( "attrs" ) )
            e.attrs = detail::attrs_block( in );
        return e;
    } );
}

inline Parsed<std::vector<Event>> parse_events( std::string_view source )
{
    std::vector<Event> events;
    std::vector<Diagnostic> diags;
    const auto lines = detail::split_lines( source );
    for ( std::size_t li = 0; li < lines.size(); ++li )
    {
        const std::string_view body = lines[ li ];
        try
        {
            if ( detail::tokenize( body, 1 ).empty() )
                continue;
        }
        catch ( const detail::syntax_failure& )
        {
            // reported by parse_event_line below
        }
        auto parsed = parse_event_line( body );
        if ( parsed.ok() )
            events.push_back( std::move( parsed.value() ) );
        else
            for ( auto d : parsed.diagnostics() )
            {
                d.span.line = static_cast<int>( li ) + 1;
                diags.push_back( std::move( d ) );
            }
    }
    if ( !diags.empty() )
        return diags;
    return events;
}

inline std::string to_event_line( const Event& e )
{
    std::string out = "t=" + std::to_string( e.at );
    if ( e.is_tick() )
        return out + " tick";
    out += " agent=" + e.actor + " act=";
    if ( const auto* g = e.grant() )
        return out + "exercise(" + to_string( *g ) + ")";
    out += *e.proposition();
    if ( !e.attrs.empty() )
        out += " " + to_string( e.attrs );
    return out;
}

} // namespace pact
