#pragma once

#include <stdexcept>
#include <string>

namespace pact
{

enum class errc
{
    precondition,
    conflict,
    state_bound,
    stale_timestamp,
    unexpected_event,
    terminal_state,
    not_found,
    invalid_spec,
    corrupt_snapshot,
    malformed,
};

inline const char* errc_name( errc code )
{
    switch ( code )
    {
    case errc::precondition: return "precondition";
    case errc::conflict: return "conflict";
    case errc::state_bound: return "state-bound";
    case errc::stale_timestamp: return "stale-timestamp";
    case errc::unexpected_event: return "unexpected-event";
    case errc::terminal_state: return "terminal-state";
    case errc::not_found: return "not-found";
    case errc::invalid_spec: return "invalid-spec";
    case errc::corrupt_snapshot: return "corrupt-snapshot";
    case errc::malformed: return "malformed";
    }
    return "unknown";
}

class error : public std::runtime_error
{
    errc _code;

public:
    error( errc code, const std::string& what ) : std::runtime_error( what ), _code{ code } {}

    [[nodiscard]] errc code() const noexcept { return _code; }
};

} // namespace pact
