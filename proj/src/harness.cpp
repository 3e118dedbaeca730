#include <digid/harness.hpp>
#include <digid/wallet.hpp>
#include <digid/wire.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <latch>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace digid::harness
{
namespace
{
	using json = nlohmann::json;
	using steady = std::chrono::steady_clock;

	double elapsed_ms (steady::time_point from, steady::time_point to)
	{
		return std::chrono::duration<double, std::milli> (to - from).count ();
	}

	std::vector<std::string> split_csv (std::string const & line)
	{
		std::vector<std::string> out;
		std::stringstream stream (line);
		std::string cell;
		while (std::getline (stream, cell, ','))
		{
			out.push_back (cell);
		}
		if (!line.empty () && line.back () == ',')
		{
			out.emplace_back ();
		}
		return out;
	}

	std::string trim (std::string text)
	{
		auto not_space = [] (unsigned char c) { return !std::isspace (c); };
		text.erase (text.begin (), std::find_if (text.begin (), text.end (), not_space));
		text.erase (std::find_if (text.rbegin (), text.rend (), not_space).base (), text.end ());
		return text;
	}

	std::uint64_t ceil_div (std::uint64_t num, std::uint64_t den)
	{
		return (num + den - 1) / den;
	}

	outcome outcome_of (error const & e)
	{
		return classify (e.code ());
	}

	sub_request part_of (rpc::exchange const & x)
	{
		return { sub_request_name (x.req.method, x.req.path), x.req.body.size (), x.res.wire_size () };
	}

	std::vector<sub_request> parts_of (std::vector<rpc::exchange> const & log)
	{
		std::vector<sub_request> out;
		for (auto const & x : log)
		{
			out.push_back (part_of (x));
		}
		return out;
	}

	void put_optional (json & j, char const * key, std::optional<double> const & value)
	{
		j[key] = value ? json (*value) : json (nullptr);
	}

	// Client half of an AP entry call built by hand so single steps can be timed.
	struct prepared_entry
	{
		json body;
		blindsig::user_session session;
	};

	prepared_entry prepare_entry (rpc::endpoint & ap, blindsig::public_key const & ap_key, wallet::wallet_token const & token, blindsig::group_params const & params, bytes const & message, blindsig::random_source & random)
	{
		auto opened = rpc::call (ap, "POST", "/entry/challenge");
		auto ownership_challenge = from_hex (opened.at ("ownership_challenge").get<std::string> ());
		json shown = json::array ();
		shown.push_back ({ { "issuer", token.issuer_id }, { "interval", token.interval }, { "message", to_hex (token.message) }, { "credential", *token.credential },
			{ "ownership", blindsig::prove_ownership (params, token.ownership, ownership_challenge, random) } });
		auto [session, e] = blindsig::user_blind (ap_key, message, opened.at ("challenge").get<blindsig::challenge> (), random);
		return { { { "session_id", opened.at ("session_id") }, { "tokens", shown }, { "e", e } }, session };
	}

	std::vector<std::string> acquire_many (wallet::wallet & purse, rpc::endpoint & cp, std::size_t count, std::optional<std::int64_t> interval = std::nullopt)
	{
		std::vector<std::string> out;
		while (out.size () < count)
		{
			auto batch = std::min<std::size_t> (64, count - out.size ());
			auto ids = purse.acquire_tokens (cp, batch, interval);
			out.insert (out.end (), ids.begin (), ids.end ());
		}
		return out;
	}

	class stack_scenario : public scenario
	{
	public:
		stack_scenario (std::string label, stack::deployment & target, std::uint64_t seed) :
			label (std::move (label)),
			target (target),
			random (blindsig::random_source::seeded (seed)),
			purse (blindsig::random_source::seeded (seed + 1), default_clock (), wallet_settings ())
		{
		}

		std::string name () const override
		{
			return label;
		}

	protected:
		static wallet::wallet_options wallet_settings ()
		{
			wallet::wallet_options out;
			out.user_ref = "harness";
			out.verify_after_entry = false;
			return out;
		}

		blindsig::random_source fork ()
		{
			std::lock_guard lock{ mutex };
			return random.fork ();
		}

		blindsig::public_key ap_key ()
		{
			return rpc::call (target.ap_endpoint (), "GET", "/key").at ("key").get<blindsig::public_key> ();
		}

		std::string label;
		stack::deployment & target;
		std::mutex mutex;
		blindsig::random_source random;
		wallet::wallet purse;
	};

	// POST /entry timed alone; challenge and blinding happen first, untimed.
	class request_signature final : public stack_scenario
	{
	public:
		using stack_scenario::stack_scenario;

		void prepare (std::size_t count) override
		{
			key = ap_key ();
			ids = acquire_many (purse, target.cp_endpoint (), count);
		}

		attempt run (std::size_t index) override
		{
			auto local = fork ();
			auto token = *purse.token (ids.at (index));
			auto entry = prepare_entry (target.ap_endpoint (), key, token, target.params (), local.draw_bytes (32), local);
			rpc::recording_endpoint tap (target.ap_endpoint ());
			attempt out;
			auto started = steady::now ();
			try
			{
				auto result = rpc::call (tap, "POST", "/entry", entry.body);
				out.latency_ms = elapsed_ms (started, steady::now ());
				blindsig::user_unblind (entry.session, result.at ("proof").get<blindsig::proof> (), key);
			}
			catch (error const & e)
			{
				out.latency_ms = elapsed_ms (started, steady::now ());
				out.result = outcome_of (e);
				out.error = e.what ();
			}
			out.parts = parts_of (tap.exchanges ());
			return out;
		}

	private:
		blindsig::public_key key;
		std::vector<std::string> ids;
	};

	// POST /enter with an AP signature over a nonce obtained before the window.
	class verify_signature final : public stack_scenario
	{
	public:
		using stack_scenario::stack_scenario;

		void prepare (std::size_t count) override
		{
			auto key = ap_key ();
			auto ids = acquire_many (purse, target.cp_endpoint (), count);
			ready.clear ();
			for (auto const & id : ids)
			{
				auto y = from_hex (rpc::call (target.service_endpoint (), "POST", "/nonce", { { "direction", "ENTRY" }, { "station_id", "A" } }).at ("nonce").get<std::string> ());
				auto entry = prepare_entry (target.ap_endpoint (), key, *purse.token (id), target.params (), y, random);
				auto result = rpc::call (target.ap_endpoint (), "POST", "/entry", entry.body);
				auto sig = blindsig::user_unblind (entry.session, result.at ("proof").get<blindsig::proof> (), key);
				ready.push_back ({ { "nonce", to_hex (y) }, { "signature", sig } });
			}
		}

		attempt run (std::size_t index) override
		{
			rpc::recording_endpoint tap (target.service_endpoint ());
			attempt out;
			try
			{
				rpc::call (tap, "POST", "/enter", ready.at (index));
			}
			catch (error const & e)
			{
				out.result = outcome_of (e);
				out.error = e.what ();
			}
			out.parts = parts_of (tap.exchanges ());
			return out;
		}

	private:
		std::vector<json> ready;
	};

	// Block fetch plus client-side check of every transcript in it.
	class verify_block final : public stack_scenario
	{
	public:
		using stack_scenario::stack_scenario;

		static constexpr std::size_t block_size = 10;

		void prepare (std::size_t) override
		{
			if (token_id)
			{
				return;
			}
			// A past interval of its own, so publishing it leaves current issuance untouched.
			auto interval = target.cp ().current_interval () - 1000;
			while (target.cp ().key_for (interval))
			{
				--interval;
			}
			target.cp ().rotate_interval_key (interval);
			auto ids = purse.acquire_tokens (target.cp_endpoint (), block_size, interval);
			target.cp ().publish_interval_block (interval);
			token_id = ids.front ();
		}

		attempt run (std::size_t) override
		{
			rpc::recording_endpoint tap (target.ap_endpoint ());
			attempt out;
			try
			{
				purse.verify_anonymity_set (*token_id, tap);
			}
			catch (error const & e)
			{
				out.result = outcome_of (e);
				out.error = e.what ();
			}
			out.parts = parts_of (tap.exchanges ());
			return out;
		}

	private:
		std::optional<std::string> token_id;
	};

	// The whole entry flow with one fresh token per iteration.
	class access_service final : public stack_scenario
	{
	public:
		using stack_scenario::stack_scenario;

		void prepare (std::size_t count) override
		{
			ids = acquire_many (purse, target.cp_endpoint (), count);
			// Cache the AP key so every iteration makes the same four calls.
			purse.add_key (ap_key ());
		}

		attempt run (std::size_t index) override
		{
			rpc::recording_endpoint service (target.service_endpoint ());
			rpc::recording_endpoint ap (target.ap_endpoint ());
			attempt out;
			try
			{
				purse.enter (service, ap, { ids.at (index) }, "A");
			}
			catch (error const & e)
			{
				out.result = outcome_of (e);
				out.error = e.what ();
			}
			auto log = service.exchanges ();
			auto more = ap.exchanges ();
			log.insert (log.end (), more.begin (), more.end ());
			out.parts = parts_of (log);
			return out;
		}

	private:
		std::vector<std::string> ids;
	};

	class owned_probe final : public scenario
	{
	public:
		owned_probe (std::string label, rpc::endpoint & target, rpc::request request) :
			inner (std::move (label), target, std::move (request))
		{
		}
		std::string name () const override
		{
			return inner.name ();
		}
		attempt run (std::size_t index) override
		{
			return inner.run (index);
		}

	private:
		probe_scenario inner;
	};
}

load_model derive_load (std::vector<rods_row> rows)
{
	std::map<std::string, std::int64_t> peak;
	for (auto const & row : rows)
	{
		if (row.arrivals < 0)
		{
			fail (errc::validation, "negative arrivals for station " + row.station_id);
		}
		auto & slot = peak[row.station_id];
		slot = std::max (slot, row.arrivals);
	}
	load_model out;
	out.rows = std::move (rows);
	if (peak.empty ())
	{
		return out;
	}
	std::uint64_t sum = 0;
	std::uint64_t top = 0;
	for (auto const & [station, value] : peak)
	{
		sum += static_cast<std::uint64_t> (value);
		top = std::max<std::uint64_t> (top, static_cast<std::uint64_t> (value));
	}
	out.load_avg = ceil_div (sum, peak.size () * 900);
	out.load_max = ceil_div (top, 900);
	return out;
}

load_model load_rods (std::istream & in)
{
	std::string line;
	std::size_t number = 0;
	std::vector<rods_row> rows;
	bool header = false;
	while (std::getline (in, line))
	{
		++number;
		if (!line.empty () && line.back () == '\r')
		{
			line.pop_back ();
		}
		if (trim (line).empty ())
		{
			continue;
		}
		auto cells = split_csv (line);
		if (!header)
		{
			if (cells.size () != 3 || trim (cells[0]) != "station_id" || trim (cells[1]) != "interval_start" || trim (cells[2]) != "arrivals")
			{
				fail (errc::parse, "line " + std::to_string (number) + ": expected header station_id,interval_start,arrivals");
			}
			header = true;
			continue;
		}
		if (cells.size () != 3)
		{
			fail (errc::parse, "line " + std::to_string (number) + ": expected 3 fields");
		}
		rods_row row{ trim (cells[0]), trim (cells[1]), 0 };
		auto count = trim (cells[2]);
		auto [end, ec] = std::from_chars (count.data (), count.data () + count.size (), row.arrivals);
		if (row.station_id.empty () || ec != std::errc{} || end != count.data () + count.size ())
		{
			fail (errc::parse, "line " + std::to_string (number) + ": malformed row");
		}
		if (row.arrivals < 0)
		{
			fail (errc::validation, "line " + std::to_string (number) + ": negative arrivals");
		}
		rows.push_back (std::move (row));
	}
	if (!header)
	{
		fail (errc::parse, "line 1: missing header");
	}
	return derive_load (std::move (rows));
}

load_model load_rods_file (std::string const & path)
{
	std::ifstream in (path);
	if (!in)
	{
		fail (errc::not_found, "cannot open " + path);
	}
	return load_rods (in);
}

std::string_view to_string (outcome value)
{
	switch (value)
	{
		case outcome::success:
			return "success";
		case outcome::timeout:
			return "timeout";
		case outcome::server_error:
			return "server-error";
		case outcome::transport_error:
			return "transport-error";
	}
	return "unknown";
}

outcome classify (errc code)
{
	switch (code)
	{
		case errc::timeout:
			return outcome::timeout;
		case errc::transport:
			return outcome::transport_error;
		default:
			return outcome::server_error;
	}
}

outcome classify (rpc::response const & res)
{
	if (res.ok ())
	{
		return outcome::success;
	}
	try
	{
		rpc::raise_for (res);
	}
	catch (error const & e)
	{
		return classify (e.code ());
	}
	return outcome::server_error;
}

double percentile (std::span<double const> sorted, double p)
{
	if (sorted.empty ())
	{
		fail (errc::parameter, "percentile of an empty sample");
	}
	auto rank = static_cast<std::size_t> (std::ceil (p / 100.0 * static_cast<double> (sorted.size ())));
	rank = std::clamp<std::size_t> (rank, 1, sorted.size ());
	return sorted[rank - 1];
}

summary summarize (std::span<request_record const> records, double duration_s)
{
	summary out;
	out.total = records.size ();
	std::vector<double> latencies;
	double last = 0;
	for (auto const & r : records)
	{
		switch (r.result)
		{
			case outcome::success:
				++out.successes;
				latencies.push_back (r.latency_ms);
				last = std::max (last, r.completed_ms);
				break;
			case outcome::timeout:
				++out.timeouts;
				break;
			case outcome::server_error:
				++out.server_errors;
				break;
			case outcome::transport_error:
				++out.transport_errors;
				break;
		}
	}
	auto window = std::max (duration_s, last / 1000.0);
	out.throughput = window > 0 ? static_cast<double> (out.successes) / window : 0;
	if (latencies.empty ())
	{
		return out;
	}
	std::sort (latencies.begin (), latencies.end ());
	auto n = static_cast<double> (latencies.size ());
	out.min = latencies.front ();
	out.max = latencies.back ();
	out.p25 = percentile (latencies, 25);
	out.p50 = percentile (latencies, 50);
	out.p75 = percentile (latencies, 75);
	out.p95 = percentile (latencies, 95);
	out.p99 = percentile (latencies, 99);
	auto mean = std::accumulate (latencies.begin (), latencies.end (), 0.0) / n;
	double squares = 0;
	for (auto x : latencies)
	{
		squares += (x - mean) * (x - mean);
	}
	auto sigma = std::sqrt (squares / n);
	out.mean = mean;
	out.stddev = sigma;
	out.skewness = sigma > 0 ? 3 * (mean - *out.p50) / sigma : 0.0;
	return out;
}

std::vector<double> schedule (run_options const & options)
{
	if (options.rate <= 0 || options.duration_s <= 0)
	{
		fail (errc::parameter, "rate and duration must be positive");
	}
	std::mt19937_64 engine (options.seed);
	std::vector<double> out;
	auto window_ms = options.duration_s * 1000.0;
	if (options.poisson)
	{
		std::exponential_distribution<double> gap (options.rate / 1000.0);
		for (auto t = gap (engine); t < window_ms; t += gap (engine))
		{
			out.push_back (t);
		}
		return out;
	}
	std::uniform_real_distribution<double> within (0.0, 1000.0);
	auto seconds = static_cast<std::size_t> (std::ceil (options.duration_s));
	auto per_second = static_cast<std::size_t> (std::llround (options.rate));
	for (std::size_t s = 0; s < seconds; ++s)
	{
		for (std::size_t i = 0; i < per_second; ++i)
		{
			auto t = static_cast<double> (s) * 1000.0 + within (engine);
			if (t < window_ms)
			{
				out.push_back (t);
			}
		}
	}
	std::sort (out.begin (), out.end ());
	return out;
}

scenario_report run_scenario (scenario & target, run_options const & options)
{
	if (options.rate < 1 || options.duration_s < 1)
	{
		fail (errc::parameter, "rate and duration must be at least 1");
	}
	auto plan = schedule (options);
	target.prepare (plan.size ());
	scenario_report report;
	report.name = target.name ();
	report.rate = options.rate;
	report.duration_s = options.duration_s;
	report.seed = options.seed;
	report.records.resize (plan.size ());
	std::latch done (static_cast<std::ptrdiff_t> (plan.size ()));
	auto start = steady::now ();
	auto limit_ms = static_cast<double> (options.timeout.count ());
	for (std::size_t i = 0; i < plan.size (); ++i)
	{
		auto due = start + std::chrono::duration_cast<steady::duration> (std::chrono::duration<double, std::milli> (plan[i]));
		std::this_thread::sleep_until (due);
		std::thread ([&, i, due] {
			auto & record = report.records[i];
			record.index = i;
			record.scheduled_ms = plan[i];
			attempt result;
			try
			{
				result = target.run (i);
			}
			catch (error const & e)
			{
				result.result = classify (e.code ());
				result.error = e.what ();
			}
			catch (std::exception const & e)
			{
				result.result = outcome::server_error;
				result.error = e.what ();
			}
			auto finished = steady::now ();
			record.latency_ms = result.latency_ms.value_or (elapsed_ms (due, finished));
			record.completed_ms = elapsed_ms (start, finished);
			record.result = result.result;
			if (record.result == outcome::success && record.latency_ms > limit_ms)
			{
				record.result = outcome::timeout;
			}
			record.parts = std::move (result.parts);
			record.error = std::move (result.error);
			done.count_down ();
		}).detach ();
	}
	done.wait ();
	report.stats = summarize (report.records, options.duration_s);
	return report;
}

sweep_result sweep_rates (scenario & target, std::vector<double> const & rates, double duration_s, std::uint64_t seed, millis timeout)
{
	if (rates.empty ())
	{
		fail (errc::parameter, "no rates to sweep");
	}
	sweep_result out;
	out.name = target.name ();
	for (auto rate : rates)
	{
		run_options options;
		options.rate = rate;
		options.duration_s = duration_s;
		options.seed = seed;
		options.timeout = timeout;
		auto report = run_scenario (target, options);
		auto const & s = report.stats;
		auto pct = [&] (std::size_t count) { return s.total ? 100.0 * static_cast<double> (count) / static_cast<double> (s.total) : 0.0; };
		out.points.push_back ({ rate, s.throughput, pct (s.timeouts), pct (s.server_errors), pct (s.transport_errors), s.p50 });
		out.reports.push_back (std::move (report));
	}
	return out;
}

std::vector<blindsign_point> bench_blindsign (std::vector<unsigned> const & sizes, std::size_t iterations, std::uint64_t seed)
{
	if (iterations == 0)
	{
		fail (errc::parameter, "iterations must be at least 1");
	}
	if (sizes.empty ())
	{
		fail (errc::parameter, "no sizes given");
	}
	for (auto bits : sizes)
	{
		if (bits < 16)
		{
			fail (errc::parameter, "group size below 16 bits");
		}
	}
	std::vector<blindsign_point> out;
	auto random = blindsig::random_source::seeded (seed);
	for (auto bits : sizes)
	{
		auto params = blindsig::generate_group (bits, random);
		auto key = blindsig::keygen (params, random);
		std::vector<bytes> messages;
		for (std::size_t i = 0; i < iterations; ++i)
		{
			messages.push_back (random.draw_bytes (32));
		}
		auto started = steady::now ();
		for (auto const & message : messages)
		{
			auto session = blindsig::signer_initial_challenge (key, random);
			auto [user, e] = blindsig::user_blind (key.pub, message, session.challenge (), random);
			auto response = blindsig::signer_respond (key, session, e);
			blindsig::user_unblind (user, response, key.pub);
		}
		auto total = elapsed_ms (started, steady::now ());
		out.push_back ({ bits, iterations, total / static_cast<double> (iterations) });
	}
	return out;
}

size_table size_report (scenario_report const & report)
{
	std::vector<std::string> order;
	std::map<std::string, size_row> rows;
	std::size_t iterations = 0;
	for (auto const & record : report.records)
	{
		if (record.result != outcome::success)
		{
			continue;
		}
		++iterations;
		for (auto const & part : record.parts)
		{
			auto [it, fresh] = rows.try_emplace (part.name, size_row{ part.name });
			if (fresh)
			{
				order.push_back (part.name);
			}
			++it->second.samples;
			it->second.mean_response_bytes += static_cast<double> (part.response_bytes);
			it->second.mean_request_bytes += static_cast<double> (part.request_bytes);
		}
	}
	size_table out;
	for (auto const & name : order)
	{
		auto row = rows[name];
		// Totals are per iteration, so a type seen twice per iteration counts twice.
		out.total_response_bytes += row.mean_response_bytes / static_cast<double> (iterations);
		out.total_request_bytes += row.mean_request_bytes / static_cast<double> (iterations);
		row.mean_response_bytes /= static_cast<double> (row.samples);
		row.mean_request_bytes /= static_cast<double> (row.samples);
		out.rows.push_back (row);
	}
	return out;
}

std::string sub_request_name (std::string const & method, std::string const & path)
{
	if (method == "POST" && path == "/nonce")
	{
		return "request-nonce";
	}
	if (method == "POST" && path == "/entry/challenge")
	{
		return "prove-owner";
	}
	if (method == "POST" && (path == "/entry" || path == "/exit"))
	{
		return "request-signature";
	}
	if (method == "POST" && path == "/enter")
	{
		return "verify-signature";
	}
	if (method == "GET" && path.starts_with ("/blocks/"))
	{
		return "verify-block";
	}
	if (method == "GET" && (path == "/key" || path.starts_with ("/keys/")))
	{
		return "fetch-key";
	}
	return method + " " + path;
}

probe_scenario::probe_scenario (std::string name, rpc::endpoint & target, rpc::request request) :
	label (std::move (name)),
	target (target),
	request (std::move (request))
{
}

attempt probe_scenario::run (std::size_t)
{
	auto res = target.send (request);
	attempt out;
	out.result = classify (res);
	out.parts.push_back ({ sub_request_name (request.method, request.path), request.body.size (), res.wire_size () });
	if (out.result != outcome::success)
	{
		out.error = res.body;
	}
	return out;
}

std::vector<std::string> const & scenario_names ()
{
	static std::vector<std::string> const names{ "request-nonce", "prove-ownership", "request-signature", "verify-signature", "verify-block", "access-service" };
	return names;
}

std::unique_ptr<scenario> make_scenario (std::string const & name, stack::deployment & target, std::uint64_t seed)
{
	if (name == "request-nonce")
	{
		return std::make_unique<owned_probe> (name, target.service_endpoint (), rpc::request{ "POST", "/nonce", json{ { "direction", "ENTRY" }, { "station_id", "A" } }.dump () });
	}
	if (name == "prove-ownership")
	{
		return std::make_unique<owned_probe> (name, target.ap_endpoint (), rpc::request{ "POST", "/entry/challenge", "{}" });
	}
	if (name == "request-signature")
	{
		return std::make_unique<request_signature> (name, target, seed);
	}
	if (name == "verify-signature")
	{
		return std::make_unique<verify_signature> (name, target, seed);
	}
	if (name == "verify-block")
	{
		return std::make_unique<verify_block> (name, target, seed);
	}
	if (name == "access-service")
	{
		return std::make_unique<access_service> (name, target, seed);
	}
	fail (errc::parameter, "unknown scenario " + name);
}

nlohmann::json to_json (summary const & value)
{
	json out{ { "total", value.total }, { "successes", value.successes }, { "throughput", value.throughput } };
	out["failures"] = { { "timeout", value.timeouts }, { "server_error", value.server_errors }, { "transport_error", value.transport_errors } };
	json latency = json::object ();
	put_optional (latency, "min", value.min);
	put_optional (latency, "p25", value.p25);
	put_optional (latency, "p50", value.p50);
	put_optional (latency, "p75", value.p75);
	put_optional (latency, "p95", value.p95);
	put_optional (latency, "p99", value.p99);
	put_optional (latency, "max", value.max);
	put_optional (latency, "mean", value.mean);
	put_optional (latency, "stddev", value.stddev);
	put_optional (latency, "skewness", value.skewness);
	out["latency_ms"] = latency;
	return out;
}

nlohmann::json to_json (scenario_report const & value, bool with_records)
{
	json out{ { "scenario", value.name }, { "rate", value.rate }, { "duration_s", value.duration_s }, { "seed", value.seed }, { "summary", to_json (value.stats) } };
	if (with_records)
	{
		json rows = json::array ();
		for (auto const & r : value.records)
		{
			rows.push_back ({ { "index", r.index }, { "scheduled_ms", r.scheduled_ms }, { "latency_ms", r.latency_ms }, { "outcome", to_string (r.result) }, { "error", r.error } });
		}
		out["records"] = rows;
	}
	return out;
}

nlohmann::json to_json (size_table const & value)
{
	json rows = json::array ();
	for (auto const & row : value.rows)
	{
		rows.push_back ({ { "name", row.name }, { "samples", row.samples }, { "mean_response_bytes", row.mean_response_bytes }, { "mean_request_bytes", row.mean_request_bytes } });
	}
	return { { "rows", rows }, { "total_response_bytes", value.total_response_bytes }, { "total_request_bytes", value.total_request_bytes } };
}

void write_plot_data (std::ostream & out, sweep_result const & sweep)
{
	out << "# rate throughput timeout_pct server_error_pct transport_error_pct p50_ms\n";
	for (auto const & p : sweep.points)
	{
		out << p.rate << ' ' << p.throughput << ' ' << p.timeout_pct << ' ' << p.server_error_pct << ' ' << p.transport_error_pct << ' ';
		if (p.p50)
		{
			out << *p.p50;
		}
		else
		{
			out << "nan";
		}
		out << '\n';
	}
}
}
