#pragma once

// Loading the bundled contracts and event files from the source tree.

#include <pact/language.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace pact_test
{

inline const std::vector<std::string> bundled = { "pizza_simple", "pizza_timed",    "pizza_types",
                                                  "pizza_power",  "pizza_promissory", "pizza_warranty" };

inline std::string contract_path( const std::string& name ) { return std::string{ PACT_CONTRACTS_DIR } + "/" + name; }
inline std::string data_path( const std::string& name ) { return std::string{ PACT_TEST_DATA_DIR } + "/" + name; }

inline std::string read_file( const std::string& path )
{
    std::ifstream in{ path, std::ios::binary };
    if ( !in )
        throw std::runtime_error( "cannot read " + path );
    return { std::istreambuf_iterator<char>{ in }, {} };
}

inline pact::ContractSpec parse_file( const std::string& path )
{
    auto parsed = pact::parse( read_file( path ) );
    if ( !parsed.ok() )
        throw std::runtime_error( path + ": " + pact::to_string( parsed.diagnostics().front() ) );
    return std::move( parsed.value() );
}

inline pact::ContractSpec load_bundled( const std::string& name ) { return parse_file( contract_path( name + ".pact" ) ); }
inline pact::ContractSpec load_data( const std::string& name ) { return parse_file( data_path( name + ".pact" ) ); }

inline std::vector<pact::Event> load_events( const std::string& name )
{
    auto parsed = pact::parse_events( read_file( contract_path( name + ".events" ) ) );
    if ( !parsed.ok() )
        throw std::runtime_error( name + ": " + pact::to_string( parsed.diagnostics().front() ) );
    return parsed.value();
}

} // namespace pact_test
