#include <digid/fareservice.hpp>
#include <digid/wire.hpp>

#include <charconv>
#include <fstream>
#include <set>

namespace digid::fareservice
{
using nlohmann::json;

std::string_view to_string (direction value)
{
	return value == direction::entry ? "ENTRY" : "EXIT";
}

direction direction_from_string (std::string_view name)
{
	if (name == "ENTRY")
		return direction::entry;
	if (name == "EXIT")
		return direction::exit;
	fail (errc::parse, "unknown direction " + std::string (name));
}

std::string_view to_string (journey_state value)
{
	switch (value)
	{
		case journey_state::open:
			return "OPEN";
		case journey_state::closing:
			return "CLOSING";
		case journey_state::closed:
			return "CLOSED";
	}
	return "OPEN";
}

void to_json (json & j, fare_nonce const & value)
{
	j = json{ { "nonce", to_hex (value.nonce) }, { "station_id", value.station_id }, { "direction", to_string (value.direction) },
		{ "issued_at", value.issued_at.count () } };
}

void from_json (json const & j, fare_nonce & value)
{
	value.nonce = from_hex (j.at ("nonce").get<std::string> ());
	value.station_id = j.at ("station_id").get<std::string> ();
	value.direction = direction_from_string (j.at ("direction").get<std::string> ());
	value.issued_at = millis{ j.at ("issued_at").get<std::int64_t> () };
}

namespace
{
	std::string trim (std::string_view text)
	{
		auto begin = text.find_first_not_of (" \t\r");
		if (begin == std::string_view::npos)
		{
			return {};
		}
		auto end = text.find_last_not_of (" \t\r");
		return std::string (text.substr (begin, end - begin + 1));
	}

	std::vector<std::string> split_csv (std::string const & line)
	{
		std::vector<std::string> out;
		std::size_t start = 0;
		while (true)
		{
			auto comma = line.find (',', start);
			out.push_back (trim (std::string_view (line).substr (start, comma == std::string::npos ? std::string::npos : comma - start)));
			if (comma == std::string::npos)
			{
				return out;
			}
			start = comma + 1;
		}
	}
}

fare_table fare_table::load_csv (std::istream & in, std::uint32_t max_fare)
{
	fare_table table{ max_fare };
	std::string line;
	std::size_t number = 0;
	bool header = false;
	while (std::getline (in, line))
	{
		++number;
		if (trim (line).empty ())
		{
			continue;
		}
		auto fields = split_csv (line);
		if (!header)
		{
			if (fields != std::vector<std::string>{ "entry", "exit", "fare" })
			{
				fail (errc::parse, "line " + std::to_string (number) + ": expected header entry,exit,fare");
			}
			header = true;
			continue;
		}
		std::uint32_t fare = 0;
		if (fields.size () != 3 || fields[0].empty () || fields[1].empty ())
		{
			fail (errc::parse, "line " + std::to_string (number) + ": expected 3 fields");
		}
		auto [ptr, ec] = std::from_chars (fields[2].data (), fields[2].data () + fields[2].size (), fare);
		if (ec != std::errc{} || ptr != fields[2].data () + fields[2].size ())
		{
			fail (errc::parse, "line " + std::to_string (number) + ": bad fare '" + fields[2] + "'");
		}
		table.set (fields[0], fields[1], fare);
	}
	if (!header)
	{
		fail (errc::parse, "missing header entry,exit,fare");
	}
	table.validate ();
	return table;
}

fare_table fare_table::load_csv_file (std::string const & path, std::uint32_t max_fare)
{
	std::ifstream in{ path };
	if (!in)
	{
		fail (errc::not_found, "cannot open fare table " + path);
	}
	return load_csv (in, max_fare);
}

void fare_table::set (std::string const & entry, std::string const & exit, std::uint32_t fare)
{
	fares[{ entry, exit }] = fare;
}

std::vector<std::string> fare_table::stations () const
{
	std::set<std::string> names;
	for (auto const & [pair, fare] : fares)
	{
		names.insert (pair.first);
		names.insert (pair.second);
	}
	return { names.begin (), names.end () };
}

std::uint32_t fare_table::fare (std::string const & entry, std::string const & exit) const
{
	if (auto found = fares.find ({ entry, exit }); found != fares.end ())
	{
		return found->second;
	}
	if (auto found = fares.find ({ exit, entry }); found != fares.end ())
	{
		return found->second;
	}
	auto known = stations ();
	auto has = [&] (std::string const & s) { return std::binary_search (known.begin (), known.end (), s); };
	if (entry == exit && has (entry))
	{
		return max;
	}
	fail (errc::not_found, "no fare from " + entry + " to " + exit);
}

void fare_table::validate () const
{
	for (auto const & [pair, fare] : fares)
	{
		if (fare > max)
		{
			fail (errc::validation, "fare " + pair.first + "->" + pair.second + " exceeds max_fare");
		}
	}
	auto names = stations ();
	for (auto const & a : names)
	{
		for (auto const & b : names)
		{
			if (a != b && !fares.contains ({ a, b }) && !fares.contains ({ b, a }))
			{
				fail (errc::validation, "no fare between " + a + " and " + b);
			}
		}
	}
}

namespace
{
	issuer::issuer_options rebate_options (service_options const & options)
	{
		issuer::issuer_options out;
		out.cp_id = options.service_id;
		out.interval_length = options.interval_length;
		out.publish_period = options.publish_period;
		return out;
	}
}

fare_service::fare_service (blindsig::group_params params, fare_table fares, std::vector<blindsig::public_key> trusted_aps_a, ledger::ledger & ledger, clock & time_a, blindsig::random_source random_a, service_options options_a) :
	table (std::move (fares)),
	trusted_aps (std::move (trusted_aps_a)),
	time (time_a),
	options (std::move (options_a)),
	rebate_issuer (std::move (params), ledger, time_a, random_a.fork (), rebate_options (options)),
	random (std::move (random_a))
{
	table.validate ();
	install_routes ();
}

bool fare_service::trusted (bytes const & message, blindsig::signature const & sig) const
{
	return std::any_of (trusted_aps.begin (), trusted_aps.end (), [&] (auto const & key) { return blindsig::verify (key, message, sig); });
}

fare_nonce fare_service::issue_nonce (direction dir, std::string const & station_id)
{
	if (station_id.empty ())
	{
		fail (errc::parameter, "station id required");
	}
	std::lock_guard lock{ mutex };
	auto now = time.now ();
	if (++issued_since_purge >= 1024)
	{
		expire_locked (now);
	}
	fare_nonce out{ random.draw_bytes (32), station_id, dir, now };
	pending_nonces.emplace (to_hex (out.nonce), out);
	return out;
}

journey_session fare_service::admit_entry (blindsig::signature const & ap_signature, bytes const & y)
{
	auto key = to_hex (y);
	{
		std::lock_guard lock{ mutex };
		auto found = pending_nonces.find (key);
		if (found == pending_nonces.end () || found->second.direction != direction::entry)
		{
			fail (errc::denied, "unknown or used entry nonce");
		}
	}
	if (!trusted (y, ap_signature))
	{
		fail (errc::denied, "entry signature not under a trusted AP key");
	}
	std::lock_guard lock{ mutex };
	auto found = pending_nonces.find (key);
	if (found == pending_nonces.end ())
	{
		fail (errc::denied, "unknown or used entry nonce");
	}
	journey_session session{ blindsig::token_id (ap_signature), found->second.station_id, time.now () };
	pending_nonces.erase (found);
	if (!journeys.emplace (session.entry_tag, session).second)
	{
		fail (errc::denied, "journey already open for this signature");
	}
	return session;
}

finish_result fare_service::finish (blindsig::signature const & ap_signature, std::string const & exit_station)
{
	auto tag = blindsig::token_id (ap_signature);
	std::lock_guard lock{ mutex };
	auto now = time.now ();
	auto found = journeys.find (tag);
	if (found == journeys.end () || found->second.state != journey_state::open)
	{
		fail (errc::denied, "no open journey for this signature");
	}
	auto & journey = found->second;
	if (now - journey.entry_time > options.journey_timeout)
	{
		journey.state = journey_state::closed;
		fail (errc::denied, "journey timed out");
	}
	auto amount = table.max_fare () - table.fare (journey.entry_station, exit_station);
	auto interval = rebate_issuer.current_interval ();
	auto key = rebate_issuer.ensure_key (interval);
	auto rebate = rebate_issuer.begin_issuance ("", 1, interval, amount);
	fare_nonce z{ random.draw_bytes (32), exit_station, direction::exit, now };
	journey.state = journey_state::closing;
	journey.exit_station = exit_station;
	journey.exit_nonce = to_hex (z.nonce);
	journey.rebate_amount = amount;
	journey.rebate_session = rebate.session_id;
	journey.rebate_interval = interval;
	pending_nonces.emplace (journey.exit_nonce, z);
	exit_binding.emplace (journey.exit_nonce, tag);
	return { z, amount, interval, rebate.session_id, key.fingerprint (), rebate.challenges.front () };
}

settle_result fare_service::settle_exit (blindsig::signature const & ap_signature_z, bytes const & z, blindsig::integer const & e)
{
	if (!trusted (z, ap_signature_z))
	{
		fail (errc::denied, "exit signature not under a trusted AP key");
	}
	std::lock_guard lock{ mutex };
	auto nonce = to_hex (z);
	auto bound = exit_binding.find (nonce);
	if (bound == exit_binding.end () || !pending_nonces.contains (nonce))
	{
		fail (errc::denied, "exit nonce unknown, unbound or used");
	}
	auto & journey = journeys.at (bound->second);
	if (journey.state != journey_state::closing)
	{
		fail (errc::denied, "journey is not closing");
	}
	auto proofs = rebate_issuer.complete_issuance (journey.rebate_session, { e });
	pending_nonces.erase (nonce);
	exit_binding.erase (bound);
	journey.state = journey_state::closed;
	return { proofs.front (), journey.rebate_amount, journey.rebate_interval, options.service_id };
}

std::size_t fare_service::expire_sessions ()
{
	std::lock_guard lock{ mutex };
	return expire_locked (time.now ());
}

std::size_t fare_service::expire_locked (millis now)
{
	issued_since_purge = 0;
	std::size_t closed = 0;
	for (auto & [tag, journey] : journeys)
	{
		if (journey.state != journey_state::closed && now - journey.entry_time > options.journey_timeout)
		{
			journey.state = journey_state::closed;
			++closed;
		}
	}
	std::erase_if (pending_nonces, [&] (auto const & item) {
		return now - item.second.issued_at > options.journey_timeout && !exit_binding.contains (item.first);
	});
	std::erase_if (exit_binding, [&] (auto const & item) { return journeys.at (item.second).state == journey_state::closed; });
	return closed;
}

nlohmann::json fare_service::session_snapshot () const
{
	std::lock_guard lock{ mutex };
	auto out = json{ { "journeys", json::array () }, { "nonces", json::array () } };
	for (auto const & [tag, j] : journeys)
	{
		out["journeys"].push_back ({ { "entry_tag", j.entry_tag }, { "entry_station", j.entry_station }, { "entry_time", j.entry_time.count () },
			{ "state", to_string (j.state) }, { "exit_station", j.exit_station }, { "exit_nonce", j.exit_nonce }, { "rebate_amount", j.rebate_amount },
			{ "rebate_session", j.rebate_session }, { "rebate_interval", j.rebate_interval } });
	}
	for (auto const & [key, nonce] : pending_nonces)
	{
		out["nonces"].push_back (nonce);
	}
	return out;
}

std::optional<journey_session> fare_service::journey (std::string const & entry_tag) const
{
	std::lock_guard lock{ mutex };
	auto found = journeys.find (entry_tag);
	if (found == journeys.end ())
	{
		return std::nullopt;
	}
	return found->second;
}

void fare_service::install_routes ()
{
	router.add ("POST", "/nonce", [this] (json const & body, rpc::path_params const &) {
		return json (issue_nonce (direction_from_string (body.at ("direction").get<std::string> ()), body.at ("station_id").get<std::string> ()));
	});
	router.add ("POST", "/enter", [this] (json const & body, rpc::path_params const &) {
		auto session = admit_entry (body.at ("signature").get<blindsig::signature> (), from_hex (body.at ("nonce").get<std::string> ()));
		return json{ { "admitted", true }, { "station_id", session.entry_station }, { "entry_time", session.entry_time.count () } };
	});
	router.add ("POST", "/finish", [this] (json const & body, rpc::path_params const &) {
		auto out = finish (body.at ("signature").get<blindsig::signature> (), body.at ("station_id").get<std::string> ());
		return json{ { "nonce", out.z },
			{ "rebate", { { "amount", out.rebate_amount }, { "interval", out.rebate_interval }, { "issuer", options.service_id }, { "session_id", out.rebate_session }, { "key", out.rebate_key }, { "challenge", out.rebate_challenge } } } };
	});
	router.add ("POST", "/settle", [this] (json const & body, rpc::path_params const &) {
		auto out = settle_exit (body.at ("signature").get<blindsig::signature> (), from_hex (body.at ("nonce").get<std::string> ()), body.at ("e").get<blindsig::integer> ());
		return json{ { "proof", out.proof }, { "amount", out.amount }, { "interval", out.interval }, { "issuer", out.issuer_id } };
	});
	router.add ("GET", "/keys/{interval}", [this] (json const &, rpc::path_params const & path) {
		rpc::local_endpoint keys{ rebate_issuer.routes () };
		return rpc::call (keys, "GET", "/keys/" + path.at ("interval"));
	});
	router.add ("POST", "/admin/publish", [this] (json const & body, rpc::path_params const &) {
		auto ref = rebate_issuer.publish_interval_block (body.at ("interval").get<std::int64_t> ());
		return json{ { "cp_id", ref.cp_id }, { "interval", ref.interval }, { "digest", ref.digest }, { "size", ref.size } };
	});
	router.add ("GET", "/admin/state", [this] (json const &, rpc::path_params const &) { return session_snapshot (); });
}
}
