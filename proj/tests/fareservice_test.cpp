#include "support.hpp"

#include <digid/fareservice.hpp>
#include <digid/wire.hpp>

#include <atomic>
#include <sstream>
#include <thread>

using namespace digid;
using digid::test::code_of;
using fareservice::direction;

namespace
{
fareservice::fare_table table ()
{
	std::istringstream csv{ "entry,exit,fare\nA,B,3\nA,C,5\nB,C,1\n" };
	return fareservice::fare_table::load_csv (csv, 5);
}

// Plain (unescrowed) blind signature standing in for an AP's answer.
blindsig::signature sign (blindsig::signer_key const & key, bytes const & message, blindsig::random_source & random)
{
	auto run = blindsig::signer_initial_challenge (key, random);
	auto [session, e] = blindsig::user_blind (key.pub, message, run.challenge (), random);
	return blindsig::user_unblind (session, blindsig::signer_respond (key, run, e), key.pub);
}

struct fixture
{
	manual_clock time{ millis{ 60'000 * 1000 } };
	ledger::ledger book{ time };
	blindsig::random_source random{ blindsig::random_source::seeded (5) };
	blindsig::signer_key ap{ blindsig::keygen (test::group64 (), random) };
	fareservice::fare_service svc{ test::group64 (), table (), { ap.pub }, book, time, blindsig::random_source::seeded (6) };

	blindsig::signature enter (std::string const & station)
	{
		auto y = svc.issue_nonce (direction::entry, station);
		auto sig = sign (ap, y.nonce, random);
		svc.admit_entry (sig, y.nonce);
		return sig;
	}

	struct settled
	{
		fareservice::settle_result result;
		blindsig::signature rebate;
		bytes message;
	};

	settled leave (blindsig::signature const & sig_y, std::string const & station)
	{
		auto finished = svc.finish (sig_y, station);
		auto key = *svc.rebates ().key_for (finished.rebate_interval);
		auto owner = blindsig::ownership_keygen (key.params, random);
		auto message = encode (token_message{ 1, owner.pub, finished.rebate_amount, finished.rebate_interval });
		auto [session, e] = blindsig::user_blind (key, message, finished.rebate_challenge, random);
		auto result = svc.settle_exit (sign (ap, finished.z.nonce, random), finished.z.nonce, e);
		return { result, blindsig::user_unblind (session, result.proof, key), message };
	}
};
}

TEST (fare_table, loads_and_looks_up_both_directions)
{
	auto t = table ();
	EXPECT_EQ (3, t.fare ("A", "B"));
	EXPECT_EQ (3, t.fare ("B", "A"));
	EXPECT_EQ (5, t.fare ("A", "A"));
	EXPECT_EQ (5, t.max_fare ());
	EXPECT_EQ ((std::vector<std::string>{ "A", "B", "C" }), t.stations ());
	EXPECT_EQ (errc::not_found, code_of ([&] { t.fare ("A", "Z"); }));
}

TEST (fare_table, rejects_fare_above_max)
{
	std::istringstream csv{ "entry,exit,fare\nA,B,6\n" };
	EXPECT_EQ (errc::validation, code_of ([&] { fareservice::fare_table::load_csv (csv, 5); }));
}

TEST (fare_table, rejects_missing_pair)
{
	std::istringstream csv{ "entry,exit,fare\nA,B,1\nC,D,1\n" };
	EXPECT_EQ (errc::validation, code_of ([&] { fareservice::fare_table::load_csv (csv, 5); }));
}

TEST (fare_table, parse_errors_name_the_line)
{
	std::istringstream bad_fare{ "entry,exit,fare\nA,B,1\nA,C,x\n" };
	try
	{
		fareservice::fare_table::load_csv (bad_fare, 5);
		FAIL ();
	}
	catch (error const & e)
	{
		EXPECT_EQ (errc::parse, e.code ());
		EXPECT_NE (std::string (e.what ()).find ("line 3"), std::string::npos);
	}
	std::istringstream no_header{ "A,B,1\n" };
	EXPECT_EQ (errc::parse, code_of ([&] { fareservice::fare_table::load_csv (no_header, 5); }));
	std::istringstream short_row{ "entry,exit,fare\nA,B\n" };
	EXPECT_EQ (errc::parse, code_of ([&] { fareservice::fare_table::load_csv (short_row, 5); }));
	std::istringstream negative{ "entry,exit,fare\nA,B,-1\n" };
	EXPECT_EQ (errc::parse, code_of ([&] { fareservice::fare_table::load_csv (negative, 5); }));
}

TEST (fare_service, nonces_distinct_pending_and_verbatim)
{
	fixture f;
	auto a = f.svc.issue_nonce (direction::entry, "A");
	auto b = f.svc.issue_nonce (direction::exit, "B");
	EXPECT_NE (a.nonce, b.nonce);
	EXPECT_EQ (32, a.nonce.size ());
	EXPECT_EQ ("A", a.station_id);
	EXPECT_EQ (direction::entry, a.direction);
	EXPECT_EQ ("B", b.station_id);
	EXPECT_EQ (direction::exit, b.direction);
	EXPECT_EQ (2, f.svc.session_snapshot ().at ("nonces").size ());
}

TEST (fare_service, admit_opens_journey)
{
	fixture f;
	auto sig = f.enter ("A");
	auto journey = f.svc.journey (blindsig::token_id (sig));
	ASSERT_TRUE (journey);
	EXPECT_EQ (fareservice::journey_state::open, journey->state);
	EXPECT_EQ ("A", journey->entry_station);
	EXPECT_TRUE (f.svc.session_snapshot ().at ("nonces").empty ());
}

TEST (fare_service, admit_replay_denied)
{
	fixture f;
	auto y = f.svc.issue_nonce (direction::entry, "A");
	auto sig = sign (f.ap, y.nonce, f.random);
	f.svc.admit_entry (sig, y.nonce);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.admit_entry (sig, y.nonce); }));
}

TEST (fare_service, admit_untrusted_key_denied)
{
	fixture f;
	auto rogue = blindsig::keygen (test::group64 (), f.random);
	auto y = f.svc.issue_nonce (direction::entry, "A");
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.admit_entry (sign (rogue, y.nonce, f.random), y.nonce); }));
	// The nonce survives a bad presentation.
	EXPECT_NO_THROW (f.svc.admit_entry (sign (f.ap, y.nonce, f.random), y.nonce));
}

TEST (fare_service, admit_unknown_or_exit_nonce_denied)
{
	fixture f;
	bytes made_up (32, 7);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.admit_entry (sign (f.ap, made_up, f.random), made_up); }));
	auto z = f.svc.issue_nonce (direction::exit, "A");
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.admit_entry (sign (f.ap, z.nonce, f.random), z.nonce); }));
}

TEST (fare_service, admit_concurrent_single_use)
{
	fixture f;
	auto y = f.svc.issue_nonce (direction::entry, "A");
	std::vector<blindsig::signature> sigs;
	for (int i = 0; i < 8; ++i)
	{
		sigs.push_back (sign (f.ap, y.nonce, f.random));
	}
	std::atomic<int> wins{ 0 };
	std::vector<std::thread> threads;
	for (auto const & sig : sigs)
	{
		threads.emplace_back ([&] {
			try
			{
				f.svc.admit_entry (sig, y.nonce);
				++wins;
			}
			catch (error const &)
			{
			}
		});
	}
	for (auto & t : threads)
	{
		t.join ();
	}
	EXPECT_EQ (1, wins.load ());
}

TEST (fare_service, finish_closes_and_binds_z)
{
	fixture f;
	auto sig = f.enter ("A");
	auto finished = f.svc.finish (sig, "B");
	EXPECT_EQ (direction::exit, finished.z.direction);
	EXPECT_EQ ("B", finished.z.station_id);
	auto journey = *f.svc.journey (blindsig::token_id (sig));
	EXPECT_EQ (fareservice::journey_state::closing, journey.state);
	EXPECT_EQ (to_hex (finished.z.nonce), journey.exit_nonce);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.finish (sig, "B"); }));
}

TEST (fare_service, finish_unknown_tag_denied)
{
	fixture f;
	auto stray = sign (f.ap, bytes (32, 1), f.random);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.finish (stray, "B"); }));
}

TEST (fare_service, rebate_is_max_minus_fare)
{
	fixture f;
	auto out = f.leave (f.enter ("A"), "B");
	EXPECT_EQ (2, out.result.amount);
	auto key = *f.svc.rebates ().key_for (out.result.interval);
	EXPECT_TRUE (blindsig::verify (key, out.message, out.rebate));
	EXPECT_EQ (2, decode_token_message (out.message).value);
}

TEST (fare_service, rebate_zero_at_max_fare)
{
	fixture f;
	auto out = f.leave (f.enter ("A"), "C");
	EXPECT_EQ (0, out.result.amount);
	EXPECT_TRUE (blindsig::verify (*f.svc.rebates ().key_for (out.result.interval), out.message, out.rebate));
}

TEST (fare_service, settle_replay_denied)
{
	fixture f;
	auto sig = f.enter ("A");
	auto finished = f.svc.finish (sig, "B");
	auto key = *f.svc.rebates ().key_for (finished.rebate_interval);
	auto [session, e] = blindsig::user_blind (key, bytes{ 1 }, finished.rebate_challenge, f.random);
	auto sig_z = sign (f.ap, finished.z.nonce, f.random);
	f.svc.settle_exit (sig_z, finished.z.nonce, e);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.settle_exit (sig_z, finished.z.nonce, e); }));
	EXPECT_EQ (fareservice::journey_state::closed, f.svc.journey (blindsig::token_id (sig))->state);
}

TEST (fare_service, settle_unbound_or_untrusted_denied)
{
	fixture f;
	auto loose = f.svc.issue_nonce (direction::exit, "B");
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.settle_exit (sign (f.ap, loose.nonce, f.random), loose.nonce, 1); }));
	auto finished = f.svc.finish (f.enter ("A"), "B");
	auto rogue = blindsig::keygen (test::group64 (), f.random);
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.settle_exit (sign (rogue, finished.z.nonce, f.random), finished.z.nonce, 1); }));
}

TEST (fare_service, rebate_block_records_amounts)
{
	fixture f;
	auto first = f.leave (f.enter ("A"), "B");
	f.leave (f.enter ("B"), "C");
	auto ref = f.svc.rebates ().publish_interval_block (first.result.interval);
	EXPECT_EQ (2, ref.size);
	auto block = *f.book.get_proof_block ("svc", first.result.interval);
	std::multiset<std::uint32_t> values;
	for (auto const & p : block.proofs)
	{
		values.insert (p.value);
	}
	EXPECT_EQ ((std::multiset<std::uint32_t>{ 2, 4 }), values);
}

TEST (fare_service, journeys_expire)
{
	fixture f;
	auto sig = f.enter ("A");
	f.enter ("B");
	f.time.advance (std::chrono::hours{ 4 } + millis{ 1 });
	EXPECT_EQ (errc::denied, code_of ([&] { f.svc.finish (sig, "B"); }));
	EXPECT_EQ (1, f.svc.expire_sessions ());
	EXPECT_EQ (0, f.svc.expire_sessions ());
}

TEST (fare_service, stores_no_token_or_issuer_data)
{
	manual_clock time;
	ledger::ledger book{ time };
	issuer::issuer cp{ test::group64 (), book, time, blindsig::random_source::seeded (1) };
	auto interval = cp.current_interval ();
	cp.rotate_interval_key (interval);
	blindsig::random_source random = blindsig::random_source::seeded (2);
	gateway::gateway_options options;
	options.sync_period = millis{ 0 };
	gateway::gateway ap{ blindsig::keygen (test::group64 (), random), book, time, blindsig::random_source::seeded (3), options };
	fareservice::fare_service svc{ test::group64 (), table (), { ap.public_key () }, book, time, blindsig::random_source::seeded (4) };
	auto tokens = test::mint (cp, 1, interval, random);
	auto y = svc.issue_nonce (direction::entry, "A");
	auto sig_y = test::ap_sign (ap, tokens, y.nonce, random, [&] (auto const & id, auto const & shown, auto const & e) { return ap.entry (id, shown, e); });
	svc.admit_entry (sig_y, y.nonce);
	auto finished = svc.finish (sig_y, "B");
	auto sig_z = test::ap_sign (ap, tokens, finished.z.nonce, random, [&] (auto const & id, auto const & shown, auto const & e) { return ap.exit (id, shown, e); });
	auto key = *svc.rebates ().key_for (finished.rebate_interval);
	auto [session, e] = blindsig::user_blind (key, bytes{ 1 }, finished.rebate_challenge, random);
	svc.settle_exit (sig_z, finished.z.nonce, e);

	auto state = svc.session_snapshot ().dump ();
	for (auto const & forbidden : { tokens[0].id (), cp.key_for (interval)->fingerprint (), to_hex (tokens[0].message), blindsig::hex (tokens[0].owner.pub) })
	{
		EXPECT_EQ (std::string::npos, state.find (forbidden)) << forbidden;
	}
	EXPECT_EQ (std::string::npos, state.find ("\"cp\""));
}

TEST (fare_service, routes_round_trip)
{
	fixture f;
	rpc::local_endpoint svc{ f.svc.routes () };
	auto y = rpc::call (svc, "POST", "/nonce", { { "direction", "ENTRY" }, { "station_id", "A" } }).get<fareservice::fare_nonce> ();
	auto sig_y = sign (f.ap, y.nonce, f.random);
	EXPECT_TRUE (rpc::call (svc, "POST", "/enter", { { "nonce", to_hex (y.nonce) }, { "signature", sig_y } }).at ("admitted"));
	auto finished = rpc::call (svc, "POST", "/finish", { { "signature", sig_y }, { "station_id", "B" } });
	auto rebate = finished.at ("rebate");
	EXPECT_EQ (2, rebate.at ("amount"));
	auto key = rpc::call (svc, "GET", "/keys/" + std::to_string (rebate.at ("interval").get<std::int64_t> ())).at ("key").get<blindsig::public_key> ();
	EXPECT_EQ (key.fingerprint (), rebate.at ("key"));
	auto [session, e] = blindsig::user_blind (key, bytes{ 9 }, rebate.at ("challenge").get<blindsig::challenge> (), f.random);
	auto z = finished.at ("nonce").get<fareservice::fare_nonce> ();
	auto settled = rpc::call (svc, "POST", "/settle", { { "signature", sign (f.ap, z.nonce, f.random) }, { "nonce", to_hex (z.nonce) }, { "e", e } });
	auto credential = blindsig::user_unblind (session, settled.at ("proof").get<blindsig::proof> (), key);
	EXPECT_TRUE (blindsig::verify (key, bytes{ 9 }, credential));
	EXPECT_EQ (errc::parse, code_of ([&] { rpc::call (svc, "POST", "/nonce", { { "direction", "SIDEWAYS" }, { "station_id", "A" } }); }));
	EXPECT_EQ (errc::not_found, code_of ([&] { rpc::call (svc, "GET", "/keys/424242"); }));
}
