#include <digid/wire.hpp>

namespace nlohmann
{
void adl_serializer<mpz_class>::to_json (json & j, mpz_class const & value)
{
	j = digid::blindsig::hex (value);
}

void adl_serializer<mpz_class>::from_json (json const & j, mpz_class & value)
{
	value = digid::blindsig::parse_hex (j.get<std::string> ());
}
}

namespace digid::blindsig
{
using nlohmann::json;

void to_json (json & j, group_params const & value)
{
	j = json{ { "bits", value.bits }, { "p", value.p }, { "q", value.q }, { "g", value.g } };
}

void from_json (json const & j, group_params & value)
{
	value.bits = j.at ("bits").get<unsigned> ();
	value.p = j.at ("p").get<integer> ();
	value.q = j.at ("q").get<integer> ();
	value.g = j.at ("g").get<integer> ();
}

void to_json (json & j, public_key const & value)
{
	j = json{ { "params", value.params }, { "h", value.h }, { "y", value.y }, { "z", value.z }, { "fingerprint", value.fingerprint () } };
}

void from_json (json const & j, public_key & value)
{
	value.params = j.at ("params").get<group_params> ();
	value.h = j.at ("h").get<integer> ();
	value.y = j.at ("y").get<integer> ();
	value.z = j.at ("z").get<integer> ();
	if (j.contains ("fingerprint") && j.at ("fingerprint").get<std::string> () != value.fingerprint ())
	{
		fail (errc::validation, "public key fingerprint mismatch");
	}
}

void to_json (json & j, challenge const & value)
{
	j = json{ { "rnd", digid::to_hex (value.rnd) }, { "a", value.a }, { "b1", value.b1 }, { "b2", value.b2 } };
}

void from_json (json const & j, challenge & value)
{
	value.rnd = digid::from_hex (j.at ("rnd").get<std::string> ());
	value.a = j.at ("a").get<integer> ();
	value.b1 = j.at ("b1").get<integer> ();
	value.b2 = j.at ("b2").get<integer> ();
}

void to_json (json & j, proof const & value)
{
	j = json{ { "r", value.r }, { "c", value.c }, { "s1", value.s1 }, { "s2", value.s2 }, { "d", value.d } };
}

void from_json (json const & j, proof & value)
{
	value.r = j.at ("r").get<integer> ();
	value.c = j.at ("c").get<integer> ();
	value.s1 = j.at ("s1").get<integer> ();
	value.s2 = j.at ("s2").get<integer> ();
	value.d = j.at ("d").get<integer> ();
}

void to_json (json & j, signature const & value)
{
	j = json{ { "zeta", value.zeta }, { "zeta1", value.zeta1 }, { "rho", value.rho }, { "omega", value.omega },
		{ "sigma1", value.sigma1 }, { "sigma2", value.sigma2 }, { "delta", value.delta }, { "mu", value.mu } };
}

void from_json (json const & j, signature & value)
{
	value.zeta = j.at ("zeta").get<integer> ();
	value.zeta1 = j.at ("zeta1").get<integer> ();
	value.rho = j.at ("rho").get<integer> ();
	value.omega = j.at ("omega").get<integer> ();
	value.sigma1 = j.at ("sigma1").get<integer> ();
	value.sigma2 = j.at ("sigma2").get<integer> ();
	value.delta = j.at ("delta").get<integer> ();
	value.mu = j.at ("mu").get<integer> ();
}

void to_json (json & j, transcript const & value)
{
	j = json{ { "challenge", value.challenge }, { "e", value.e }, { "proof", value.proof } };
}

void from_json (json const & j, transcript & value)
{
	value.challenge = j.at ("challenge").get<challenge> ();
	value.e = j.at ("e").get<integer> ();
	value.proof = j.at ("proof").get<proof> ();
}

void to_json (json & j, ownership_proof const & value)
{
	j = json{ { "t", value.commitment }, { "s", value.response } };
}

void from_json (json const & j, ownership_proof & value)
{
	value.commitment = j.at ("t").get<integer> ();
	value.response = j.at ("s").get<integer> ();
}
}

namespace digid::wire
{
nlohmann::json hex_bytes (bytes const & data)
{
	return to_hex (data);
}

bytes parse_bytes (nlohmann::json const & j)
{
	return from_hex (j.get<std::string> ());
}
}
