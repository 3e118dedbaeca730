#pragma once

#include <digid/blindsig.hpp>

#include <json.hpp>

// JSON codecs for protocol values. Integers travel as lowercase hex
// without leading zeros; byte strings as hex.
namespace nlohmann
{
template <>
struct adl_serializer<mpz_class>
{
	static void to_json (json & j, mpz_class const & value);
	static void from_json (json const & j, mpz_class & value);
};
}

namespace digid::blindsig
{
void to_json (nlohmann::json & j, group_params const & value);
void from_json (nlohmann::json const & j, group_params & value);
void to_json (nlohmann::json & j, public_key const & value);
void from_json (nlohmann::json const & j, public_key & value);
void to_json (nlohmann::json & j, challenge const & value);
void from_json (nlohmann::json const & j, challenge & value);
void to_json (nlohmann::json & j, proof const & value);
void from_json (nlohmann::json const & j, proof & value);
void to_json (nlohmann::json & j, signature const & value);
void from_json (nlohmann::json const & j, signature & value);
void to_json (nlohmann::json & j, transcript const & value);
void from_json (nlohmann::json const & j, transcript & value);
void to_json (nlohmann::json & j, ownership_proof const & value);
void from_json (nlohmann::json const & j, ownership_proof & value);
}

namespace digid::wire
{
nlohmann::json hex_bytes (bytes const & data);
bytes parse_bytes (nlohmann::json const & j);
}
