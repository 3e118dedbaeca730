#include <digid/gateway.hpp>
#include <digid/wire.hpp>

namespace digid::gateway
{
using nlohmann::json;

void to_json (json & j, presented_token const & value)
{
	j = json{ { "issuer", value.issuer_id }, { "interval", value.interval }, { "message", to_hex (value.message) },
		{ "credential", value.credential }, { "ownership", value.ownership } };
}

void from_json (json const & j, presented_token & value)
{
	value.issuer_id = j.at ("issuer").get<std::string> ();
	value.interval = j.at ("interval").get<std::int64_t> ();
	value.message = from_hex (j.at ("message").get<std::string> ());
	value.credential = j.at ("credential").get<blindsig::signature> ();
	value.ownership = j.at ("ownership").get<blindsig::ownership_proof> ();
}

namespace
{
	json to_json_receipts (std::vector<receipt> const & receipts)
	{
		auto out = json::array ();
		for (auto const & r : receipts)
		{
			out.push_back ({ { "token_id", r.token_id }, { "state", ledger::to_string (r.state) }, { "recorded_at", r.recorded_at.count () } });
		}
		return out;
	}

	std::string transcript_tag (blindsig::challenge const & challenge, blindsig::integer const & e, blindsig::proof const & proof)
	{
		framed_writer w;
		w.put (challenge.rnd);
		for (auto const * v : { &challenge.a, &challenge.b1, &challenge.b2, &e, &proof.r, &proof.c, &proof.s1, &proof.s2, &proof.d })
		{
			w.put (blindsig::encode (*v));
		}
		return sha256_hex (w.data ());
	}
}

gateway::gateway (blindsig::signer_key key_a, ledger::ledger & ledger_a, clock & time_a, blindsig::random_source random_a, gateway_options options_a) :
	key (std::move (key_a)),
	ledger (ledger_a),
	time (time_a),
	options (std::move (options_a)),
	random (std::move (random_a))
{
	install_routes ();
	if (options.publication_period > millis{ 0 })
	{
		publisher = std::make_unique<periodic_task> (options.publication_period, [this] { publish_pending (); });
	}
	if (options.sync_period > millis{ 0 })
	{
		syncer = std::make_unique<periodic_task> (options.sync_period, [this] { sync_spent_cache (); });
	}
}

gateway::~gateway ()
{
	syncer.reset ();
	publisher.reset ();
}

ledger::proof_block gateway::serve_proof_block (std::string const & cp_id, std::int64_t interval) const
{
	auto block = ledger.get_proof_block (cp_id, interval);
	if (!block)
	{
		fail (errc::not_found, "no proof block for " + cp_id + "/" + std::to_string (interval));
	}
	return *block;
}

opened_session gateway::open_session ()
{
	std::lock_guard lock{ session_mutex };
	auto now = time.now ();
	std::erase_if (sessions, [now] (auto const & item) { return item.second.expires_at <= now; });
	auto run = blindsig::signer_initial_challenge (key, random);
	opened_session out{ random_id (random), random.draw_bytes (32), run.challenge (), key.pub.fingerprint (), now + options.ownership_ttl };
	sessions.emplace (out.session_id, live_session{ std::move (run), out.ownership_challenge, out.expires_at });
	return out;
}

gateway::live_session gateway::take_session (std::string const & session_id)
{
	std::lock_guard lock{ session_mutex };
	auto found = sessions.find (session_id);
	if (found == sessions.end ())
	{
		fail (errc::denied, "unknown or used session");
	}
	auto session = std::move (found->second);
	sessions.erase (found);
	if (session.expires_at <= time.now ())
	{
		fail (errc::denied, "ownership challenge expired");
	}
	return session;
}

blindsig::public_key gateway::issuer_key (std::string const & issuer_id, std::int64_t interval)
{
	{
		std::lock_guard lock{ key_mutex };
		auto found = issuer_keys.find ({ issuer_id, interval });
		if (found != issuer_keys.end ())
		{
			return found->second;
		}
	}
	auto published = ledger.find_key (issuer_id, interval);
	if (!published)
	{
		fail (errc::denied, "no published key for " + issuer_id + "/" + std::to_string (interval));
	}
	std::lock_guard lock{ key_mutex };
	issuer_keys.emplace (std::pair{ issuer_id, interval }, *published);
	return *published;
}

std::vector<std::string> gateway::validate (live_session const & session, std::vector<presented_token> const & tokens)
{
	if (tokens.empty ())
	{
		fail (errc::parameter, "no tokens presented");
	}
	std::vector<std::string> ids;
	std::set<std::string> seen;
	for (auto const & token : tokens)
	{
		auto issuer = issuer_key (token.issuer_id, token.interval);
		if (!blindsig::verify (issuer, token.message, token.credential))
		{
			fail (errc::denied, "credential does not verify");
		}
		token_message message;
		try
		{
			message = decode_token_message (token.message);
		}
		catch (error const &)
		{
			fail (errc::denied, "malformed token message");
		}
		if (message.interval != token.interval)
		{
			fail (errc::denied, "token message names a different interval");
		}
		if (!blindsig::verify_ownership (issuer.params, message.owner, session.ownership_challenge, token.ownership))
		{
			fail (errc::denied, "ownership proof rejected");
		}
		auto id = blindsig::token_id (token.credential);
		if (!seen.insert (id).second)
		{
			fail (errc::parameter, "token presented twice");
		}
		ids.push_back (std::move (id));
	}
	return ids;
}

blindsig::proof gateway::sign (live_session & session, blindsig::integer const & e)
{
	return blindsig::signer_respond (key, session.run, e);
}

signed_result gateway::entry (std::string const & session_id, std::vector<presented_token> const & tokens, blindsig::integer const & e)
{
	auto session = take_session (session_id);
	if (!key.pub.params.is_scalar (e))
	{
		fail (errc::parameter, "challenge response outside Z_q");
	}
	auto ids = validate (session, tokens);
	auto challenge = session.run.challenge ();
	{
		std::lock_guard lock{ state_mutex };
		for (auto const & id : ids)
		{
			if (spent_cache.contains (id))
			{
				fail (errc::double_spend, "token already spent");
			}
		}
	}
	switch (ledger.record_escrow_all (ids, options.ap_id))
	{
		case ledger::escrow_result::ok:
			break;
		case ledger::escrow_result::already_escrowed:
			fail (errc::conflict, "token already escrowed");
		case ledger::escrow_result::already_spent:
			fail (errc::double_spend, "token already spent");
	}
	auto proof = sign (session, e);
	auto now = time.now ();
	signed_result out{ proof, {} };
	for (auto const & id : ids)
	{
		out.receipts.push_back ({ id, ledger::token_state::escrowed, now });
	}
	std::lock_guard lock{ state_mutex };
	auto tag = transcript_tag (challenge, e, proof);
	for (auto const & id : ids)
	{
		escrow_by_token[id] = tag;
	}
	escrows[tag] = { ids, tag, now };
	return out;
}

signed_result gateway::exit (std::string const & session_id, std::vector<presented_token> const & tokens, blindsig::integer const & e)
{
	auto session = take_session (session_id);
	if (!key.pub.params.is_scalar (e))
	{
		fail (errc::parameter, "challenge response outside Z_q");
	}
	auto ids = validate (session, tokens);
	{
		std::lock_guard lock{ state_mutex };
		for (auto const & id : ids)
		{
			if (spent_cache.contains (id))
			{
				fail (errc::double_spend, "token already spent");
			}
		}
		for (auto const & id : ids)
		{
			switch (ledger.query_token_state (id))
			{
				case ledger::token_state::escrowed:
					break;
				case ledger::token_state::fresh:
					fail (errc::not_escrowed, "token was never escrowed");
				case ledger::token_state::spent:
					spent_cache.insert (id);
					fail (errc::double_spend, "token already spent");
			}
		}
		if (options.publication_period > millis{ 0 })
		{
			pending.insert (pending.end (), ids.begin (), ids.end ());
		}
		else
		{
			switch (ledger.record_spend_all (ids, options.ap_id))
			{
				case ledger::spend_result::ok:
					break;
				case ledger::spend_result::not_escrowed:
					fail (errc::not_escrowed, "token was never escrowed");
				case ledger::spend_result::already_spent:
					spent_cache.insert (ids.begin (), ids.end ());
					fail (errc::double_spend, "token already spent");
			}
		}
		spent_cache.insert (ids.begin (), ids.end ());
		for (auto const & id : ids)
		{
			auto found = escrow_by_token.find (id);
			if (found != escrow_by_token.end ())
			{
				escrows.erase (found->second);
				escrow_by_token.erase (found);
			}
		}
	}
	auto proof = sign (session, e);
	signed_result out{ proof, {} };
	auto now = time.now ();
	for (auto const & id : ids)
	{
		out.receipts.push_back ({ id, ledger::token_state::spent, now });
	}
	return out;
}

std::size_t gateway::publish_pending ()
{
	std::vector<std::string> batch;
	{
		std::lock_guard lock{ state_mutex };
		batch.swap (pending);
	}
	std::size_t written = 0;
	std::size_t conflicts = 0;
	for (std::size_t i = 0; i < batch.size (); ++i)
	{
		try
		{
			if (ledger.record_spend (batch[i], options.ap_id) == ledger::spend_result::ok)
			{
				++written;
			}
			else
			{
				++conflicts;
			}
		}
		catch (error const &)
		{
			std::lock_guard lock{ state_mutex };
			pending.insert (pending.end (), batch.begin () + static_cast<std::ptrdiff_t> (i), batch.end ());
			late_conflicts += conflicts;
			throw;
		}
	}
	std::lock_guard lock{ state_mutex };
	late_conflicts += conflicts;
	return written;
}

std::size_t gateway::sync_spent_cache ()
{
	publish_pending ();
	auto started = time.now ();
	std::unique_lock lock{ state_mutex };
	auto since = last_sync;
	lock.unlock ();
	auto records = ledger.snapshot_spent_set (since);
	lock.lock ();
	std::size_t added = 0;
	for (auto const & record : records)
	{
		if (record.state == ledger::token_state::spent && spent_cache.insert (record.token_id).second)
		{
			++added;
		}
	}
	last_sync = std::max (last_sync, started);
	return added;
}

bool gateway::cache_contains (std::string const & token_id) const
{
	std::lock_guard lock{ state_mutex };
	return spent_cache.contains (token_id);
}

std::size_t gateway::pending_spends () const
{
	std::lock_guard lock{ state_mutex };
	return pending.size ();
}

std::size_t gateway::late_double_spends () const
{
	std::lock_guard lock{ state_mutex };
	return late_conflicts;
}

std::vector<escrow_entry> gateway::open_escrows () const
{
	std::lock_guard lock{ state_mutex };
	std::vector<escrow_entry> out;
	for (auto const & [tag, entry] : escrows)
	{
		out.push_back (entry);
	}
	return out;
}

void gateway::install_routes ()
{
	router.add ("GET", "/key", [this] (json const &, rpc::path_params const &) {
		return json{ { "ap_id", options.ap_id }, { "key", key.pub } };
	});
	router.add ("GET", "/blocks/{cp}/{interval}", [this] (json const &, rpc::path_params const & path) {
		std::int64_t interval = 0;
		try
		{
			interval = std::stoll (path.at ("interval"));
		}
		catch (std::exception const &)
		{
			fail (errc::parse, "bad interval");
		}
		return json (serve_proof_block (path.at ("cp"), interval));
	});
	router.add ("POST", "/entry/challenge", [this] (json const &, rpc::path_params const &) {
		auto opened = open_session ();
		return json{ { "session_id", opened.session_id }, { "ownership_challenge", to_hex (opened.ownership_challenge) },
			{ "challenge", opened.challenge }, { "key", opened.key_fingerprint }, { "expires_at", opened.expires_at.count () } };
	});
	auto signing = [this] (bool entering) {
		return [this, entering] (json const & body, rpc::path_params const &) {
			auto session_id = body.at ("session_id").get<std::string> ();
			auto tokens = body.at ("tokens").get<std::vector<presented_token>> ();
			auto e = body.at ("e").get<blindsig::integer> ();
			auto result = entering ? entry (session_id, tokens, e) : exit (session_id, tokens, e);
			return json{ { "proof", result.proof }, { "receipts", to_json_receipts (result.receipts) } };
		};
	};
	router.add ("POST", "/entry", signing (true));
	router.add ("POST", "/exit", signing (false));
	router.add ("POST", "/admin/sync", [this] (json const &, rpc::path_params const &) {
		return json{ { "new_entries", sync_spent_cache () } };
	});
}
}
