#pragma once

#include <digid/gateway.hpp>
#include <digid/issuer.hpp>

#include <gtest/gtest.h>

namespace digid::test
{
inline blindsig::group_params const & group64 ()
{
	static auto params = [] {
		auto random = blindsig::random_source::seeded (64);
		return blindsig::generate_group (64, random);
	}();
	return params;
}

/// A credential plus the ownership key behind it, minted straight from an issuer.
struct held_token
{
	blindsig::ownership_key owner;
	bytes message;
	blindsig::signature credential;
	blindsig::transcript record;
	std::string issuer_id;
	std::int64_t interval{ 0 };

	std::string id () const
	{
		return blindsig::token_id (credential);
	}
};

inline std::vector<held_token> mint (issuer::issuer & cp, std::size_t count, std::int64_t interval, blindsig::random_source & random)
{
	auto key = *cp.key_for (interval);
	auto begun = cp.begin_issuance ("test", count, interval);
	std::vector<held_token> out;
	std::vector<blindsig::user_session> sessions;
	std::vector<blindsig::integer> es;
	for (auto const & challenge : begun.challenges)
	{
		held_token token;
		token.owner = blindsig::ownership_keygen (key.params, random);
		token.message = encode (token_message{ 1, token.owner.pub, 1, interval });
		token.issuer_id = cp.id ();
		token.interval = interval;
		auto [session, e] = blindsig::user_blind (key, token.message, challenge, random);
		token.record = { challenge, e, {} };
		sessions.push_back (session);
		es.push_back (e);
		out.push_back (std::move (token));
	}
	auto proofs = cp.complete_issuance (begun.session_id, es);
	for (std::size_t i = 0; i < count; ++i)
	{
		out[i].record.proof = proofs[i];
		out[i].credential = blindsig::user_unblind (sessions[i], proofs[i], key);
	}
	return out;
}

inline std::vector<gateway::presented_token> present (std::vector<held_token> const & tokens, bytes const & challenge, blindsig::random_source & random)
{
	std::vector<gateway::presented_token> out;
	for (auto const & t : tokens)
	{
		out.push_back ({ t.issuer_id, t.interval, t.message, t.credential, blindsig::prove_ownership (group64 (), t.owner, challenge, random) });
	}
	return out;
}

/// Runs one AP signing call (entry or exit) over `message` and returns the unblinded AP signature.
template <typename Call>
blindsig::signature ap_sign (gateway::gateway & ap, std::vector<held_token> const & tokens, bytes const & message, blindsig::random_source & random, Call && call)
{
	auto opened = ap.open_session ();
	auto [session, e] = blindsig::user_blind (ap.public_key (), message, opened.challenge, random);
	auto result = call (opened.session_id, present (tokens, opened.ownership_challenge, random), e);
	return blindsig::user_unblind (session, result.proof, ap.public_key ());
}

template <typename Fn>
errc code_of (Fn && fn)
{
	try
	{
		fn ();
	}
	catch (error const & e)
	{
		return e.code ();
	}
	ADD_FAILURE () << "expected an error";
	return errc::internal;
}
}
