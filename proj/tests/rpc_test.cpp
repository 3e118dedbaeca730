#include <digid/rpc.hpp>

#include <gtest/gtest.h>

#include <future>
#include <thread>

using namespace digid;
using nlohmann::json;

namespace
{
rpc::router sample ()
{
	rpc::router r;
	r.add ("GET", "/items/{id}/parts/{part}", [] (json const &, rpc::path_params const & p) {
		return json{ { "id", p.at ("id") }, { "part", p.at ("part") } };
	});
	r.add ("POST", "/echo", [] (json const & body, rpc::path_params const &) { return body; });
	r.add ("POST", "/conflict", [] (json const &, rpc::path_params const &) -> json { fail (errc::conflict, "taken"); });
	r.add ("POST", "/boom", [] (json const &, rpc::path_params const &) -> json { throw std::runtime_error ("boom"); });
	r.add ("POST", "/field", [] (json const & body, rpc::path_params const &) { return json{ { "v", body.at ("missing") } }; });
	r.add ("GET", "/slow", [] (json const &, rpc::path_params const &) {
		std::this_thread::sleep_for (std::chrono::milliseconds{ 300 });
		return json{ { "slow", true } };
	});
	return r;
}
}

TEST (rpc, status_mapping)
{
	EXPECT_EQ (400, rpc::status_for (errc::parameter));
	EXPECT_EQ (400, rpc::status_for (errc::parse));
	EXPECT_EQ (403, rpc::status_for (errc::denied));
	EXPECT_EQ (404, rpc::status_for (errc::not_found));
	EXPECT_EQ (409, rpc::status_for (errc::double_spend));
	EXPECT_EQ (422, rpc::status_for (errc::discrepancy));
	EXPECT_EQ (503, rpc::status_for (errc::unavailable));
	EXPECT_EQ (504, rpc::status_for (errc::timeout));
	EXPECT_EQ (500, rpc::status_for (errc::internal));
}

TEST (rpc, router_matches_segments)
{
	auto r = sample ();
	auto res = r.dispatch ({ "GET", "/items/7/parts/x", "" });
	ASSERT_EQ (200, res.status);
	EXPECT_EQ ((json{ { "id", "7" }, { "part", "x" } }), json::parse (res.body));
	EXPECT_EQ (404, r.dispatch ({ "GET", "/items/7/parts", "" }).status);
	EXPECT_EQ (404, r.dispatch ({ "POST", "/items/7/parts/x", "" }).status);
	EXPECT_EQ (404, r.dispatch ({ "GET", "/nowhere", "" }).status);
}

TEST (rpc, router_error_bodies)
{
	auto r = sample ();
	auto conflict = r.dispatch ({ "POST", "/conflict", "" });
	EXPECT_EQ (409, conflict.status);
	EXPECT_EQ ("conflict", json::parse (conflict.body).at ("error"));
	EXPECT_EQ (400, r.dispatch ({ "POST", "/echo", "{not json" }).status);
	EXPECT_EQ (400, r.dispatch ({ "POST", "/field", "{}" }).status);
	auto boom = r.dispatch ({ "POST", "/boom", "" });
	EXPECT_EQ (500, boom.status);
	EXPECT_EQ ("internal", json::parse (boom.body).at ("error"));
}

TEST (rpc, call_rethrows_server_code)
{
	auto r = sample ();
	rpc::local_endpoint local{ r };
	EXPECT_EQ (json ({ { "a", 1 } }), rpc::call (local, "POST", "/echo", { { "a", 1 } }));
	try
	{
		rpc::call (local, "POST", "/conflict");
		FAIL ();
	}
	catch (error const & e)
	{
		EXPECT_EQ (errc::conflict, e.code ());
		EXPECT_STREQ ("taken", e.what ());
	}
}

TEST (rpc, recording_endpoint_keeps_exchanges)
{
	auto r = sample ();
	rpc::local_endpoint local{ r };
	rpc::recording_endpoint rec{ local };
	rpc::call (rec, "POST", "/echo", { { "x", 2 } });
	EXPECT_THROW (rpc::call (rec, "POST", "/conflict"), error);
	auto log = rec.exchanges ();
	ASSERT_EQ (2, log.size ());
	EXPECT_EQ ("/echo", log[0].req.path);
	EXPECT_EQ (409, log[1].res.status);
	rec.clear ();
	EXPECT_TRUE (rec.exchanges ().empty ());
}

TEST (rpc, http_round_trip_counts_headers)
{
	auto r = sample ();
	rpc::http_server server{ r };
	server.start ();
	rpc::http_endpoint link{ server.url () };
	auto res = link.send ({ "POST", "/echo", R"({"k":"v"})" });
	EXPECT_EQ (200, res.status);
	EXPECT_EQ (R"({"k":"v"})", res.body);
	EXPECT_GT (res.header_bytes, 40);
	EXPECT_EQ (res.header_bytes + res.body.size (), res.wire_size ());
	EXPECT_EQ ("7", rpc::call (link, "GET", "/items/7/parts/y").at ("id"));
	try
	{
		rpc::call (link, "POST", "/conflict");
		FAIL ();
	}
	catch (error const & e)
	{
		EXPECT_EQ (errc::conflict, e.code ());
	}
}

TEST (rpc, http_unreachable_is_transport)
{
	int port = 0;
	{
		rpc::router r;
		rpc::http_server server{ r };
		server.start ();
		port = server.port ();
	}
	rpc::http_endpoint link{ "http://127.0.0.1:" + std::to_string (port), millis{ 1000 } };
	auto res = link.send ({ "GET", "/", "" });
	EXPECT_EQ (0, res.status);
	EXPECT_EQ ("transport", json::parse (res.body).at ("error"));
}

TEST (rpc, http_client_timeout)
{
	auto r = sample ();
	rpc::http_server server{ r };
	server.start ();
	rpc::http_endpoint link{ server.url (), millis{ 100 } };
	auto res = link.send ({ "GET", "/slow", "" });
	EXPECT_EQ (0, res.status);
	EXPECT_EQ ("timeout", json::parse (res.body).at ("error"));
}

TEST (rpc, limiter_answers_504_when_queued_too_long)
{
	rpc::router r;
	r.add ("GET", "/work", [] (json const &, rpc::path_params const &) { return json{ { "ok", true } }; });
	rpc::server_options options;
	options.max_concurrent = 1;
	options.min_service_time = millis{ 300 };
	options.gateway_timeout = millis{ 100 };
	rpc::http_server server{ r, options };
	server.start ();
	auto hit = [&] { return rpc::http_endpoint{ server.url () }.send ({ "GET", "/work", "" }).status; };
	auto first = std::async (std::launch::async, hit);
	std::this_thread::sleep_for (millis{ 50 });
	auto second = std::async (std::launch::async, hit);
	EXPECT_EQ (200, first.get ());
	EXPECT_EQ (504, second.get ());
	// Capacity frees up once the first request leaves.
	EXPECT_EQ (200, hit ());
}

TEST (rpc, server_pads_service_time)
{
	rpc::router r;
	r.add ("GET", "/work", [] (json const &, rpc::path_params const &) { return json{}; });
	rpc::server_options options;
	options.min_service_time = millis{ 120 };
	rpc::http_server server{ r, options };
	server.start ();
	auto started = std::chrono::steady_clock::now ();
	EXPECT_EQ (200, rpc::http_endpoint{ server.url () }.send ({ "GET", "/work", "" }).status);
	EXPECT_GE (std::chrono::steady_clock::now () - started, millis{ 120 });
}
