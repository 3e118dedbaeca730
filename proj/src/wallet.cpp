#include <digid/wallet.hpp>
#include <digid/wire.hpp>

#include <fstream>

namespace digid::wallet
{
using nlohmann::json;

namespace
{
	constexpr std::array status_names{ "REQUESTED", "ISSUED", "VERIFIED", "ESCROWED", "SPENT" };
}

std::string_view to_string (token_status value)
{
	return status_names[static_cast<std::size_t> (value)];
}

token_status token_status_from_string (std::string_view name)
{
	for (std::size_t i = 0; i < status_names.size (); ++i)
	{
		if (name == status_names[i])
		{
			return static_cast<token_status> (i);
		}
	}
	fail (errc::parse, "unknown token status " + std::string (name));
}

void to_json (json & j, wallet_token const & value)
{
	j = json{ { "id", value.id }, { "issuer", value.issuer_id }, { "interval", value.interval }, { "value", value.value },
		{ "x", value.ownership.secret }, { "X", value.ownership.pub }, { "message", to_hex (value.message) }, { "key", value.key_fingerprint },
		{ "issuance", value.issuance }, { "state", to_string (value.state) }, { "discrepancy", value.discrepancy } };
	if (value.credential)
	{
		j["credential"] = *value.credential;
	}
	if (value.anonymity_set)
	{
		j["anonymity_set"] = *value.anonymity_set;
	}
}

void from_json (json const & j, wallet_token & value)
{
	value.id = j.at ("id").get<std::string> ();
	value.issuer_id = j.at ("issuer").get<std::string> ();
	value.interval = j.at ("interval").get<std::int64_t> ();
	value.value = j.at ("value").get<std::uint32_t> ();
	value.ownership = { j.at ("x").get<blindsig::integer> (), j.at ("X").get<blindsig::integer> () };
	value.message = from_hex (j.at ("message").get<std::string> ());
	value.key_fingerprint = j.at ("key").get<std::string> ();
	value.issuance = j.at ("issuance").get<blindsig::transcript> ();
	value.state = token_status_from_string (j.at ("state").get<std::string> ());
	value.discrepancy = j.value ("discrepancy", std::string{});
	value.credential.reset ();
	if (j.contains ("credential"))
	{
		value.credential = j.at ("credential").get<blindsig::signature> ();
	}
	value.anonymity_set.reset ();
	if (j.contains ("anonymity_set"))
	{
		value.anonymity_set = j.at ("anonymity_set").get<std::size_t> ();
	}
}

void to_json (json & j, journey_ticket const & value)
{
	j = json{ { "id", value.id }, { "signature", value.ap_signature }, { "y", to_hex (value.y) }, { "ap_key", value.ap_key_fingerprint },
		{ "tokens", value.tokens }, { "entry_station", value.entry_station }, { "entry_time", value.entry_time.count () } };
}

void from_json (json const & j, journey_ticket & value)
{
	value.id = j.at ("id").get<std::string> ();
	value.ap_signature = j.at ("signature").get<blindsig::signature> ();
	value.y = from_hex (j.at ("y").get<std::string> ());
	value.ap_key_fingerprint = j.at ("ap_key").get<std::string> ();
	value.tokens = j.at ("tokens").get<std::vector<std::string>> ();
	value.entry_station = j.at ("entry_station").get<std::string> ();
	value.entry_time = millis{ j.at ("entry_time").get<std::int64_t> () };
}

wallet::wallet (blindsig::random_source random_a, clock & time_a, wallet_options options_a) :
	time (time_a),
	options (std::move (options_a)),
	random (std::move (random_a))
{
	if (options.store && std::filesystem::exists (*options.store))
	{
		load ();
	}
}

void wallet::load ()
{
	std::ifstream in{ *options.store };
	std::string line;
	std::size_t number = 0;
	while (std::getline (in, line))
	{
		++number;
		if (line.empty ())
		{
			continue;
		}
		try
		{
			auto record = json::parse (line);
			auto kind = record.at ("kind").get<std::string> ();
			if (kind == "token")
			{
				auto t = record.at ("token").get<wallet_token> ();
				held[t.id] = t;
			}
			else if (kind == "ticket")
			{
				auto t = record.at ("ticket").get<journey_ticket> ();
				live_tickets[t.id] = t;
			}
			else if (kind == "ticket_closed")
			{
				live_tickets.erase (record.at ("id").get<std::string> ());
			}
			else if (kind == "key")
			{
				auto key = record.at ("key").get<blindsig::public_key> ();
				keys[key.fingerprint ()] = key;
			}
		}
		catch (json::exception const & e)
		{
			fail (errc::parse, "wallet store line " + std::to_string (number) + ": " + e.what ());
		}
	}
}

void wallet::append (json const & record)
{
	if (!options.store)
	{
		return;
	}
	std::ofstream out{ *options.store, std::ios::app };
	out << record.dump () << '\n';
	if (!out)
	{
		fail (errc::internal, "cannot write wallet store");
	}
}

void wallet::compact ()
{
	std::lock_guard lock{ mutex };
	if (!options.store)
	{
		return;
	}
	auto temp = *options.store;
	temp += ".tmp";
	{
		std::ofstream out{ temp, std::ios::trunc };
		for (auto const & [fp, key] : keys)
		{
			out << json{ { "kind", "key" }, { "key", key } }.dump () << '\n';
		}
		for (auto const & [id, t] : held)
		{
			out << json{ { "kind", "token" }, { "token", t } }.dump () << '\n';
		}
		for (auto const & [id, t] : live_tickets)
		{
			out << json{ { "kind", "ticket" }, { "ticket", t } }.dump () << '\n';
		}
		if (!out)
		{
			fail (errc::internal, "cannot write wallet store");
		}
	}
	std::filesystem::rename (temp, *options.store);
}

void wallet::add_key (blindsig::public_key key)
{
	std::lock_guard lock{ mutex };
	auto fp = key.fingerprint ();
	if (keys.emplace (fp, key).second)
	{
		append ({ { "kind", "key" }, { "key", key } });
	}
}

blindsig::public_key wallet::key_by_fingerprint (std::string const & fingerprint) const
{
	std::lock_guard lock{ mutex };
	auto found = keys.find (fingerprint);
	if (found == keys.end ())
	{
		fail (errc::not_found, "unknown key " + fingerprint);
	}
	return found->second;
}

blindsig::public_key wallet::fetch_key (rpc::endpoint & target, std::string const & path, std::string const & expected)
{
	{
		std::lock_guard lock{ mutex };
		auto found = keys.find (expected);
		if (found != keys.end ())
		{
			return found->second;
		}
	}
	auto key = rpc::call (target, "GET", path).at ("key").get<blindsig::public_key> ();
	if (key.fingerprint () != expected)
	{
		fail (errc::discrepancy, "served key does not match the session's key " + expected);
	}
	add_key (key);
	return key;
}

void wallet::remember (blindsig::user_session const & session)
{
	if (options.retain_blinding)
	{
		std::lock_guard lock{ mutex };
		blinding.push_back (session);
	}
}

std::vector<blindsig::user_session> wallet::blinding_log () const
{
	std::lock_guard lock{ mutex };
	return blinding;
}

void wallet::advance (std::string const & id, token_status state)
{
	auto & t = held.at (id);
	if (state > t.state)
	{
		t.state = state;
		append ({ { "kind", "token" }, { "token", t } });
	}
}

std::vector<std::string> wallet::acquire_tokens (rpc::endpoint & cp, std::size_t count, std::optional<std::int64_t> interval)
{
	if (count == 0)
	{
		fail (errc::parameter, "token count must be at least 1");
	}
	json begin{ { "user_ref", options.user_ref }, { "count", count } };
	if (interval)
	{
		begin["interval"] = *interval;
	}
	auto begun = rpc::call (cp, "POST", "/issue/begin", begin);
	auto session_interval = begun.at ("interval").get<std::int64_t> ();
	auto challenges = begun.at ("challenges").get<std::vector<blindsig::challenge>> ();
	if (challenges.size () != count)
	{
		fail (errc::invalid_proof, "issuer answered with the wrong number of challenges");
	}
	auto fingerprint = begun.at ("key").get<std::string> ();
	auto key = fetch_key (cp, "/keys/" + std::to_string (session_interval), fingerprint);

	std::vector<wallet_token> fresh (count);
	std::vector<blindsig::user_session> sessions;
	std::vector<blindsig::integer> es;
	{
		std::lock_guard lock{ mutex };
		for (std::size_t i = 0; i < count; ++i)
		{
			auto & t = fresh[i];
			t.issuer_id = begun.at ("issuer").get<std::string> ();
			t.interval = session_interval;
			t.ownership = blindsig::ownership_keygen (key.params, random);
			t.message = encode (token_message{ token_message::current_version, t.ownership.pub, 1, session_interval });
			t.key_fingerprint = fingerprint;
			auto [session, e] = blindsig::user_blind (key, t.message, challenges[i], random);
			t.issuance = { challenges[i], e, {} };
			sessions.push_back (session);
			es.push_back (e);
		}
	}
	for (auto const & s : sessions)
	{
		remember (s);
	}
	auto done = rpc::call (cp, "POST", "/issue/complete", { { "session_id", begun.at ("session_id") }, { "e", es } });
	auto proofs = done.at ("proofs").get<std::vector<blindsig::proof>> ();
	if (proofs.size () != count)
	{
		fail (errc::invalid_proof, "issuer answered with the wrong number of proofs");
	}
	for (std::size_t i = 0; i < count; ++i)
	{
		fresh[i].credential = blindsig::user_unblind (sessions[i], proofs[i], key);
		fresh[i].issuance.proof = proofs[i];
		fresh[i].id = blindsig::token_id (*fresh[i].credential);
		fresh[i].state = token_status::issued;
	}
	std::vector<std::string> ids;
	std::lock_guard lock{ mutex };
	for (auto & t : fresh)
	{
		ids.push_back (t.id);
		append ({ { "kind", "token" }, { "token", t } });
		held[t.id] = std::move (t);
	}
	return ids;
}

std::size_t wallet::verify_anonymity_set (std::string const & token_id, rpc::endpoint & ap)
{
	auto t = token (token_id);
	if (!t || !t->credential)
	{
		fail (errc::not_found, "no issued token " + token_id);
	}
	auto key = key_by_fingerprint (t->key_fingerprint);
	auto block = rpc::call (ap, "GET", "/blocks/" + t->issuer_id + "/" + std::to_string (t->interval));
	auto flag = [&] (std::string const & why) {
		std::lock_guard lock{ mutex };
		auto & stored = held.at (token_id);
		stored.discrepancy = why;
		append ({ { "kind", "token" }, { "token", stored } });
		fail (errc::discrepancy, why);
	};
	if (block.at ("cp_key").get<std::string> () != t->key_fingerprint)
	{
		flag ("block is not under the key that issued this token");
	}
	auto own = json (t->issuance).dump ();
	bool found = false;
	std::size_t m = 0;
	for (auto const & entry : block.at ("proofs"))
	{
		++m;
		if (entry.at ("key").get<std::string> () != t->key_fingerprint || !blindsig::verify_transcript (key, entry.at ("transcript").get<blindsig::transcript> ()))
		{
			flag ("block entry " + std::to_string (m) + " is not under the interval key");
		}
		found = found || entry.at ("transcript").dump () == own;
	}
	if (!found)
	{
		flag ("own proof missing from the published block");
	}
	std::lock_guard lock{ mutex };
	auto & stored = held.at (token_id);
	stored.anonymity_set = m;
	stored.discrepancy.clear ();
	if (stored.state < token_status::verified)
	{
		stored.state = token_status::verified;
	}
	append ({ { "kind", "token" }, { "token", stored } });
	return m;
}

blindsig::signature wallet::ap_sign (rpc::endpoint & ap, std::string const & path, std::vector<std::string> const & token_ids, bytes const & message)
{
	auto opened = rpc::call (ap, "POST", "/entry/challenge");
	auto fingerprint = opened.at ("key").get<std::string> ();
	if (!options.trusted_ap_keys.empty () && !options.trusted_ap_keys.contains (fingerprint))
	{
		fail (errc::denied, "AP key is not trusted");
	}
	auto ap_key = fetch_key (ap, "/key", fingerprint);
	auto ownership_challenge = from_hex (opened.at ("ownership_challenge").get<std::string> ());
	auto shown = json::array ();
	std::optional<blindsig::user_session> session;
	blindsig::integer e;
	{
		std::lock_guard lock{ mutex };
		for (auto const & id : token_ids)
		{
			auto const & t = held.at (id);
			auto params = keys.at (t.key_fingerprint).params;
			shown.push_back ({ { "issuer", t.issuer_id }, { "interval", t.interval }, { "message", to_hex (t.message) }, { "credential", *t.credential },
				{ "ownership", blindsig::prove_ownership (params, t.ownership, ownership_challenge, random) } });
		}
		auto blinded = blindsig::user_blind (ap_key, message, opened.at ("challenge").get<blindsig::challenge> (), random);
		session = blinded.first;
		e = blinded.second;
	}
	remember (*session);
	auto result = rpc::call (ap, "POST", path, { { "session_id", opened.at ("session_id") }, { "tokens", shown }, { "e", e } });
	return blindsig::user_unblind (*session, result.at ("proof").get<blindsig::proof> (), ap_key);
}

journey_ticket wallet::enter (rpc::endpoint & service, rpc::endpoint & ap, std::vector<std::string> const & token_ids, std::string const & station)
{
	if (token_ids.empty ())
	{
		fail (errc::parameter, "no tokens given");
	}
	{
		std::lock_guard lock{ mutex };
		for (auto const & id : token_ids)
		{
			auto found = held.find (id);
			if (found == held.end ())
			{
				fail (errc::parameter, "unknown token " + id);
			}
			if (found->second.state != token_status::issued && found->second.state != token_status::verified)
			{
				fail (errc::parameter, "token " + id + " is " + std::string (to_string (found->second.state)));
			}
		}
	}
	auto y = from_hex (rpc::call (service, "POST", "/nonce", { { "direction", "ENTRY" }, { "station_id", station } }).at ("nonce").get<std::string> ());
	auto sig_y = ap_sign (ap, "/entry", token_ids, y);
	journey_ticket ticket;
	{
		std::lock_guard lock{ mutex };
		for (auto const & id : token_ids)
		{
			advance (id, token_status::escrowed);
		}
		ticket = { random_id (random), sig_y, y, "", token_ids, station, time.now () };
	}
	rpc::call (service, "POST", "/enter", { { "nonce", to_hex (y) }, { "signature", sig_y } });
	{
		std::lock_guard lock{ mutex };
		for (auto const & [fp, key] : keys)
		{
			if (blindsig::verify (key, y, sig_y))
			{
				ticket.ap_key_fingerprint = fp;
			}
		}
		live_tickets[ticket.id] = ticket;
		append ({ { "kind", "ticket" }, { "ticket", ticket } });
	}
	if (options.verify_after_entry)
	{
		for (auto const & id : token_ids)
		{
			try
			{
				verify_anonymity_set (id, ap);
			}
			catch (error const &)
			{
				// Not a precondition to travel; discrepancies are kept on the token.
			}
		}
	}
	return ticket;
}

blindsig::signature wallet::prove_and_finalise (rpc::endpoint & ap, std::vector<std::string> const & token_ids, bytes const & z)
{
	try
	{
		auto sig = ap_sign (ap, "/exit", token_ids, z);
		std::lock_guard lock{ mutex };
		for (auto const & id : token_ids)
		{
			advance (id, token_status::spent);
		}
		return sig;
	}
	catch (error const & e)
	{
		if (e.code () == errc::double_spend)
		{
			std::lock_guard lock{ mutex };
			for (auto const & id : token_ids)
			{
				advance (id, token_status::spent);
			}
		}
		throw;
	}
}

std::vector<std::string> wallet::exit (rpc::endpoint & service, rpc::endpoint & ap, std::string const & ticket_id, std::string const & station)
{
	auto ticket = this->ticket (ticket_id);
	if (!ticket)
	{
		fail (errc::not_found, "no live ticket " + ticket_id);
	}
	{
		std::lock_guard lock{ mutex };
		for (auto const & id : ticket->tokens)
		{
			if (held.at (id).state == token_status::spent)
			{
				fail (errc::double_spend, "token " + id + " is already spent");
			}
		}
	}
	auto finished = rpc::call (service, "POST", "/finish", { { "signature", ticket->ap_signature }, { "station_id", station } });
	auto z = from_hex (finished.at ("nonce").at ("nonce").get<std::string> ());
	auto rebate = finished.at ("rebate");
	auto sig_z = prove_and_finalise (ap, ticket->tokens, z);

	auto amount = rebate.at ("amount").get<std::uint32_t> ();
	auto interval = rebate.at ("interval").get<std::int64_t> ();
	auto fingerprint = rebate.at ("key").get<std::string> ();
	auto key = fetch_key (service, "/keys/" + std::to_string (interval), fingerprint);
	wallet_token credit;
	blindsig::user_session session;
	{
		std::lock_guard lock{ mutex };
		credit.issuer_id = rebate.at ("issuer").get<std::string> ();
		credit.interval = interval;
		credit.value = amount;
		credit.ownership = blindsig::ownership_keygen (key.params, random);
		credit.message = encode (token_message{ token_message::current_version, credit.ownership.pub, amount, interval });
		credit.key_fingerprint = fingerprint;
		auto challenge = rebate.at ("challenge").get<blindsig::challenge> ();
		auto blinded = blindsig::user_blind (key, credit.message, challenge, random);
		session = blinded.first;
		credit.issuance = { challenge, blinded.second, {} };
	}
	remember (session);
	auto settled = rpc::call (service, "POST", "/settle", { { "signature", sig_z }, { "nonce", to_hex (z) }, { "e", credit.issuance.e } });
	credit.issuance.proof = settled.at ("proof").get<blindsig::proof> ();
	credit.credential = blindsig::user_unblind (session, credit.issuance.proof, key);
	credit.id = blindsig::token_id (*credit.credential);
	credit.state = token_status::issued;
	std::lock_guard lock{ mutex };
	append ({ { "kind", "token" }, { "token", credit } });
	held[credit.id] = credit;
	live_tickets.erase (ticket_id);
	append ({ { "kind", "ticket_closed" }, { "id", ticket_id } });
	return { credit.id };
}

std::vector<wallet_token> wallet::tokens () const
{
	std::lock_guard lock{ mutex };
	std::vector<wallet_token> out;
	for (auto const & [id, t] : held)
	{
		out.push_back (t);
	}
	return out;
}

std::optional<wallet_token> wallet::token (std::string const & id) const
{
	std::lock_guard lock{ mutex };
	auto found = held.find (id);
	if (found == held.end ())
	{
		return std::nullopt;
	}
	return found->second;
}

std::vector<journey_ticket> wallet::tickets () const
{
	std::lock_guard lock{ mutex };
	std::vector<journey_ticket> out;
	for (auto const & [id, t] : live_tickets)
	{
		out.push_back (t);
	}
	return out;
}

std::optional<journey_ticket> wallet::ticket (std::string const & id) const
{
	std::lock_guard lock{ mutex };
	auto found = live_tickets.find (id);
	if (found == live_tickets.end ())
	{
		return std::nullopt;
	}
	return found->second;
}

void wallet::import_token (wallet_token t)
{
	std::lock_guard lock{ mutex };
	append ({ { "kind", "token" }, { "token", t } });
	held[t.id] = std::move (t);
}

void wallet::import_ticket (journey_ticket t)
{
	std::lock_guard lock{ mutex };
	append ({ { "kind", "ticket" }, { "ticket", t } });
	live_tickets[t.id] = std::move (t);
}
}
