#include <digid/issuer.hpp>
#include <digid/wire.hpp>

namespace digid::issuer
{
using nlohmann::json;

namespace
{
	std::int64_t parse_interval (std::string const & text)
	{
		try
		{
			std::size_t used = 0;
			auto value = std::stoll (text, &used);
			if (used == text.size ())
			{
				return value;
			}
		}
		catch (std::exception const &)
		{
		}
		fail (errc::parse, "bad interval " + text);
	}
}

issuer::issuer (blindsig::group_params params_a, ledger::ledger & ledger_a, clock & time_a, blindsig::random_source random_a, issuer_options options_a, std::shared_ptr<payment_client> payments_a) :
	params (std::move (params_a)),
	ledger (ledger_a),
	time (time_a),
	options (std::move (options_a)),
	payments (payments_a ? std::move (payments_a) : std::make_shared<approve_all> ()),
	random (std::move (random_a))
{
	params.validate ();
	if (options.interval_length <= millis{ 0 })
	{
		fail (errc::parameter, "interval length must be positive");
	}
	install_routes ();
	if (options.publish_period > millis{ 0 })
	{
		timer = std::make_unique<periodic_task> (options.publish_period, [this] { tick (); });
	}
}

issuer::~issuer ()
{
	timer.reset ();
}

std::int64_t issuer::current_interval () const
{
	return time.now ().count () / options.interval_length.count ();
}

interval_key issuer::rotate_interval_key (std::int64_t interval)
{
	std::lock_guard lock{ mutex };
	if (published.contains (interval) || ledger.get_proof_block (options.cp_id, interval))
	{
		fail (errc::conflict, "interval " + std::to_string (interval) + " is already published");
	}
	if (keys.contains (interval))
	{
		fail (errc::conflict, "interval " + std::to_string (interval) + " already has a key");
	}
	interval_key fresh{ interval, blindsig::keygen (params, random) };
	ledger.publish_key (options.cp_id, interval, fresh.key.pub);
	keys.emplace (interval, fresh);
	return fresh;
}

std::optional<blindsig::public_key> issuer::key_for (std::int64_t interval) const
{
	std::lock_guard lock{ mutex };
	auto found = keys.find (interval);
	if (found == keys.end ())
	{
		return std::nullopt;
	}
	return found->second.key.pub;
}

blindsig::public_key issuer::ensure_key (std::int64_t interval)
{
	if (auto existing = key_for (interval))
	{
		return *existing;
	}
	try
	{
		return rotate_interval_key (interval).key.pub;
	}
	catch (error const & e)
	{
		// Lost a race with another caller rotating the same interval.
		if (e.code () != errc::conflict || !key_for (interval))
		{
			throw;
		}
		return *key_for (interval);
	}
}

interval_key const & issuer::key_locked (std::int64_t interval) const
{
	auto found = keys.find (interval);
	if (found == keys.end ())
	{
		fail (errc::not_found, "no key for interval " + std::to_string (interval));
	}
	return found->second;
}

issuance_challenge issuer::begin_issuance (std::string const & user_ref, std::size_t count, std::int64_t interval, std::uint32_t value)
{
	if (count == 0)
	{
		fail (errc::parameter, "token count must be at least 1");
	}
	{
		std::lock_guard lock{ mutex };
		key_locked (interval);
	}
	if (!payments->authorize (user_ref, count))
	{
		fail (errc::denied, "payment declined");
	}
	std::lock_guard lock{ mutex };
	auto const & key = key_locked (interval);
	if (published.contains (interval))
	{
		fail (errc::conflict, "interval " + std::to_string (interval) + " is already published");
	}
	issuance_challenge out{ random_id (random), interval, key.key.pub.fingerprint (), {} };
	session state{ interval, value, {} };
	for (std::size_t i = 0; i < count; ++i)
	{
		state.runs.push_back (blindsig::signer_initial_challenge (key.key, random));
		out.challenges.push_back (state.runs.back ().challenge ());
	}
	sessions.emplace (out.session_id, std::move (state));
	return out;
}

std::vector<blindsig::proof> issuer::complete_issuance (std::string const & session_id, std::vector<blindsig::integer> const & es)
{
	std::lock_guard lock{ mutex };
	if (completed.contains (session_id))
	{
		fail (errc::replay, "issuance session already completed");
	}
	auto found = sessions.find (session_id);
	if (found == sessions.end ())
	{
		fail (errc::not_found, "unknown issuance session");
	}
	auto & state = found->second;
	if (es.size () != state.runs.size ())
	{
		fail (errc::parameter, "expected " + std::to_string (state.runs.size ()) + " challenge responses, got " + std::to_string (es.size ()));
	}
	for (auto const & e : es)
	{
		if (!params.is_scalar (e))
		{
			fail (errc::parameter, "challenge response outside Z_q");
		}
	}
	if (published.contains (state.interval))
	{
		fail (errc::conflict, "interval " + std::to_string (state.interval) + " is already published");
	}
	auto const & key = key_locked (state.interval);
	auto fingerprint = key.key.pub.fingerprint ();
	std::vector<blindsig::proof> proofs;
	std::vector<ledger::proof_record> records;
	for (std::size_t i = 0; i < es.size (); ++i)
	{
		auto challenge = state.runs[i].challenge ();
		proofs.push_back (blindsig::signer_respond (key.key, state.runs[i], es[i]));
		records.push_back ({ fingerprint, { challenge, es[i], proofs.back () }, state.value });
	}
	auto & pending = queue[state.interval];
	pending.insert (pending.end (), records.begin (), records.end ());
	completed.insert (session_id);
	sessions.erase (found);
	return proofs;
}

ledger::block_ref issuer::publish_interval_block (std::int64_t interval)
{
	std::lock_guard lock{ mutex };
	auto found = queue.find (interval);
	if (found == queue.end () || found->second.empty ())
	{
		if (published.contains (interval))
		{
			fail (errc::conflict, "interval " + std::to_string (interval) + " is already published");
		}
		fail (errc::not_found, "nothing to publish for interval " + std::to_string (interval));
	}
	ledger::proof_block block{ options.cp_id, interval, key_locked (interval).key.pub.fingerprint (), found->second, time.now () };
	auto ref = ledger.append_proof_block (std::move (block));
	published.insert (interval);
	queue.erase (found);
	return ref;
}

std::size_t issuer::queued (std::int64_t interval) const
{
	std::lock_guard lock{ mutex };
	auto found = queue.find (interval);
	return found == queue.end () ? 0 : found->second.size ();
}

void issuer::tick ()
{
	auto now = current_interval ();
	ensure_key (now);
	std::vector<std::int64_t> due;
	{
		std::lock_guard lock{ mutex };
		for (auto const & [interval, records] : queue)
		{
			if (interval < now && !records.empty ())
			{
				due.push_back (interval);
			}
		}
	}
	for (auto interval : due)
	{
		publish_interval_block (interval);
	}
}

void issuer::install_routes ()
{
	router.add ("POST", "/issue/begin", [this] (json const & body, rpc::path_params const &) {
		auto count = body.at ("count").get<std::int64_t> ();
		if (count < 0)
		{
			fail (errc::parameter, "token count must be at least 1");
		}
		std::int64_t interval;
		if (body.contains ("interval"))
		{
			interval = body.at ("interval").get<std::int64_t> ();
		}
		else
		{
			// The current interval's key is created on first use.
			interval = current_interval ();
			ensure_key (interval);
		}
		auto out = begin_issuance (body.value ("user_ref", std::string{}), static_cast<std::size_t> (count), interval);
		return json{ { "session_id", out.session_id }, { "issuer", options.cp_id }, { "interval", out.interval }, { "key", out.key_fingerprint }, { "challenges", out.challenges } };
	});
	router.add ("POST", "/issue/complete", [this] (json const & body, rpc::path_params const &) {
		auto proofs = complete_issuance (body.at ("session_id").get<std::string> (), body.at ("e").get<std::vector<blindsig::integer>> ());
		return json{ { "proofs", proofs } };
	});
	router.add ("POST", "/admin/publish", [this] (json const & body, rpc::path_params const &) {
		auto ref = publish_interval_block (body.at ("interval").get<std::int64_t> ());
		return json{ { "cp_id", ref.cp_id }, { "interval", ref.interval }, { "digest", ref.digest }, { "size", ref.size } };
	});
	router.add ("POST", "/admin/rotate", [this] (json const & body, rpc::path_params const &) {
		auto interval = body.contains ("interval") ? body.at ("interval").get<std::int64_t> () : current_interval ();
		auto fresh = rotate_interval_key (interval);
		return json{ { "interval", fresh.interval }, { "key", fresh.key.pub } };
	});
	router.add ("GET", "/keys/{interval}", [this] (json const &, rpc::path_params const & path) {
		auto const & text = path.at ("interval");
		auto interval = text == "current" ? current_interval () : parse_interval (text);
		auto key = text == "current" ? std::optional{ ensure_key (interval) } : key_for (interval);
		if (!key)
		{
			fail (errc::not_found, "no key for interval " + text);
		}
		return json{ { "issuer", options.cp_id }, { "interval", interval }, { "key", *key } };
	});
}
}
