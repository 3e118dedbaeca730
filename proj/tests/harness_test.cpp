#include <digid/harness.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

using namespace digid;
using namespace digid::harness;

namespace
{
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

rpc::router sleeper (millis delay, std::string body = "ok")
{
	rpc::router routes;
	routes.add ("GET", "/probe", [delay, body] (auto const &, auto const &) {
		std::this_thread::sleep_for (delay);
		return nlohmann::json (body);
	});
	return routes;
}

// Naive nearest rank: smallest sample value with at least p% of the sample at or below it.
double naive_percentile (std::vector<double> values, double p)
{
	std::sort (values.begin (), values.end ());
	auto n = static_cast<double> (values.size ());
	for (std::size_t i = 0; i < values.size (); ++i)
	{
		if (static_cast<double> (i + 1) >= p / 100.0 * n - 1e-9)
		{
			return values[i];
		}
	}
	return values.back ();
}

request_record ok (double latency)
{
	request_record r;
	r.latency_ms = latency;
	r.completed_ms = latency;
	return r;
}

class fixed_scenario final : public scenario
{
public:
	std::string name () const override
	{
		return "fixed";
	}
	attempt run (std::size_t) override
	{
		attempt out;
		out.parts.push_back ({ "alpha", 10, 100 });
		out.parts.push_back ({ "beta", 20, 100 });
		return out;
	}
};
}

TEST (harness, load_rods_hand_computed)
{
	std::istringstream in ("station_id,interval_start,arrivals\n"
						   "S1,2024-01-01T07:00,100\n"
						   "S1,2024-01-01T07:15,1801\n"
						   "S2,2024-01-01T07:00,450\n");
	auto model = load_rods (in);
	EXPECT_EQ (3, model.rows.size ());
	// (1801 + 450) / (2 * 900) = 1.25 -> 2; 1801 / 900 = 2.001 -> 3
	EXPECT_EQ (2, model.load_avg);
	EXPECT_EQ (3, model.load_max);
}

TEST (harness, load_rods_exact_multiples_do_not_round_up)
{
	std::istringstream in ("station_id,interval_start,arrivals\nA,t0,900\nB,t0,1800\n");
	auto model = load_rods (in);
	EXPECT_EQ (2, model.load_avg);
	EXPECT_EQ (2, model.load_max);
}

TEST (harness, load_rods_malformed_row_names_line)
{
	std::istringstream in ("station_id,interval_start,arrivals\nA,t0,5\nB,t1,lots\n");
	try
	{
		load_rods (in);
		FAIL ();
	}
	catch (error const & e)
	{
		EXPECT_EQ (errc::parse, e.code ());
		EXPECT_NE (std::string::npos, std::string (e.what ()).find ("line 3"));
	}
}

TEST (harness, load_rods_negative_arrivals)
{
	std::istringstream in ("station_id,interval_start,arrivals\nA,t0,-4\n");
	EXPECT_EQ (errc::validation, code_of ([&] { load_rods (in); }));
}

TEST (harness, load_rods_missing_header)
{
	std::istringstream in ("A,t0,4\n");
	EXPECT_EQ (errc::parse, code_of ([&] { load_rods (in); }));
}

TEST (harness, summarize_matches_naive)
{
	std::mt19937_64 engine (7);
	std::lognormal_distribution<double> dist (3.0, 0.5);
	std::vector<request_record> records;
	std::vector<double> values;
	for (int i = 0; i < 1000; ++i)
	{
		auto v = dist (engine);
		records.push_back (ok (v));
		values.push_back (v);
	}
	auto s = summarize (records, 1000);
	for (double p : { 25.0, 50.0, 75.0, 95.0, 99.0 })
	{
		auto expected = naive_percentile (values, p);
		auto got = p == 25 ? *s.p25 : p == 50 ? *s.p50 : p == 75 ? *s.p75 : p == 95 ? *s.p95 : *s.p99;
		EXPECT_EQ (expected, got) << p;
	}
	double mean = 0;
	for (auto v : values)
	{
		mean += v;
	}
	mean /= values.size ();
	double var = 0;
	for (auto v : values)
	{
		var += (v - mean) * (v - mean);
	}
	auto sigma = std::sqrt (var / values.size ());
	EXPECT_NEAR (sigma, *s.stddev, 1e-9 * sigma);
	auto skew = 3 * (mean - naive_percentile (values, 50)) / sigma;
	EXPECT_NEAR (skew, *s.skewness, 1e-9 * std::abs (skew));
	EXPECT_EQ (*std::min_element (values.begin (), values.end ()), *s.min);
	EXPECT_EQ (*std::max_element (values.begin (), values.end ()), *s.max);
}

TEST (harness, percentile_small_samples)
{
	std::vector<double> sorted{ 1, 2, 3, 4 };
	EXPECT_EQ (2, percentile (sorted, 50));
	EXPECT_EQ (1, percentile (sorted, 25));
	EXPECT_EQ (4, percentile (sorted, 99));
	std::vector<double> one{ 9 };
	EXPECT_EQ (9, percentile (one, 1));
}

TEST (harness, summarize_zero_sigma)
{
	std::vector<request_record> records{ ok (5), ok (5), ok (5) };
	auto s = summarize (records, 3);
	EXPECT_EQ (0, *s.stddev);
	EXPECT_EQ (0, *s.skewness);
	EXPECT_DOUBLE_EQ (1.0, s.throughput);
}

TEST (harness, summarize_no_successes)
{
	std::vector<request_record> records (3);
	records[0].result = outcome::timeout;
	records[1].result = outcome::server_error;
	records[2].result = outcome::transport_error;
	auto s = summarize (records, 10);
	EXPECT_FALSE (s.p50);
	EXPECT_FALSE (s.mean);
	EXPECT_FALSE (s.skewness);
	EXPECT_EQ (1, s.timeouts);
	EXPECT_EQ (1, s.server_errors);
	EXPECT_EQ (1, s.transport_errors);
	EXPECT_EQ (0, s.throughput);
	auto j = to_json (s);
	EXPECT_TRUE (j["latency_ms"]["p50"].is_null ());
	EXPECT_EQ (1, j["failures"]["timeout"]);
}

TEST (harness, latencies_cover_successes_only)
{
	std::vector<request_record> records{ ok (1), ok (3) };
	request_record slow;
	slow.latency_ms = 1e6;
	slow.result = outcome::timeout;
	records.push_back (slow);
	auto s = summarize (records, 2);
	EXPECT_EQ (3, *s.max);
	EXPECT_EQ (2, *s.mean);
}

TEST (harness, schedule_uniform_per_second)
{
	run_options options;
	options.rate = 7;
	options.duration_s = 5;
	options.seed = 3;
	auto plan = schedule (options);
	ASSERT_EQ (35, plan.size ());
	EXPECT_TRUE (std::is_sorted (plan.begin (), plan.end ()));
	for (int s = 0; s < 5; ++s)
	{
		auto in_second = std::count_if (plan.begin (), plan.end (), [s] (double t) { return t >= s * 1000 && t < (s + 1) * 1000; });
		EXPECT_EQ (7, in_second);
	}
	EXPECT_EQ (plan, schedule (options));
	options.seed = 4;
	EXPECT_NE (plan, schedule (options));
}

TEST (harness, schedule_poisson_flag)
{
	run_options options;
	options.rate = 20;
	options.duration_s = 50;
	options.poisson = true;
	auto plan = schedule (options);
	// 1000 expected arrivals; five standard deviations is about 160.
	EXPECT_NEAR (1000.0, static_cast<double> (plan.size ()), 160.0);
	EXPECT_LT (plan.back (), 50000.0);
}

TEST (harness, all_success_stub_has_no_failures)
{
	fixed_scenario target;
	run_options options;
	options.rate = 10;
	options.duration_s = 2;
	auto report = run_scenario (target, options);
	EXPECT_EQ (20, report.stats.total);
	EXPECT_EQ (20, report.stats.successes);
	EXPECT_EQ (0, report.stats.timeouts + report.stats.server_errors + report.stats.transport_errors);
}

TEST (harness, fixed_size_stub_report)
{
	fixed_scenario target;
	run_options options;
	options.rate = 3;
	options.duration_s = 1;
	auto table = size_report (run_scenario (target, options));
	ASSERT_EQ (2, table.rows.size ());
	EXPECT_EQ ("alpha", table.rows[0].name);
	EXPECT_DOUBLE_EQ (100, table.rows[0].mean_response_bytes);
	EXPECT_DOUBLE_EQ (100, table.rows[1].mean_response_bytes);
	EXPECT_DOUBLE_EQ (10, table.rows[0].mean_request_bytes);
	EXPECT_DOUBLE_EQ (200, table.total_response_bytes);
	EXPECT_DOUBLE_EQ (30, table.total_request_bytes);
}

TEST (harness, hundred_byte_probe)
{
	auto routes = sleeper (millis{ 0 }, std::string (98, 'x'));
	rpc::local_endpoint target (routes);
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	run_options options;
	options.rate = 2;
	options.duration_s = 1;
	auto table = size_report (run_scenario (probe, options));
	ASSERT_EQ (1, table.rows.size ());
	EXPECT_DOUBLE_EQ (100, table.rows[0].mean_response_bytes);
}

TEST (harness, fixed_latency_stub)
{
	auto routes = sleeper (millis{ 10 });
	rpc::http_server server (routes);
	server.start ();
	rpc::http_endpoint target (server.url ());
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	run_options options;
	options.rate = 1;
	options.duration_s = 60;
	auto report = run_scenario (probe, options);
	EXPECT_EQ (60, report.stats.total);
	EXPECT_EQ (60, report.stats.successes);
	EXPECT_NEAR (10.0, *report.stats.p50, 5.0);
	EXPECT_NEAR (1.0, report.stats.throughput, 0.02);
}

TEST (harness, always_timeout_stub)
{
	auto routes = sleeper (millis{ 600 });
	rpc::http_server server (routes);
	server.start ();
	rpc::http_endpoint target (server.url (), millis{ 200 });
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	run_options options;
	options.rate = 2;
	options.duration_s = 2;
	auto report = run_scenario (probe, options);
	EXPECT_EQ (4, report.stats.total);
	EXPECT_EQ (4, report.stats.timeouts);
	EXPECT_FALSE (report.stats.p50);
}

TEST (harness, unreachable_target_is_transport_error)
{
	rpc::http_endpoint target ("http://127.0.0.1:1", millis{ 500 });
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	run_options options;
	options.rate = 1;
	options.duration_s = 1;
	auto report = run_scenario (probe, options);
	EXPECT_EQ (1, report.stats.transport_errors);
}

TEST (harness, slow_success_counts_as_timeout)
{
	auto routes = sleeper (millis{ 150 });
	rpc::local_endpoint target (routes);
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	run_options options;
	options.rate = 1;
	options.duration_s = 1;
	options.timeout = millis{ 50 };
	EXPECT_EQ (1, run_scenario (probe, options).stats.timeouts);
}

TEST (harness, capacity_five_sweep)
{
	auto routes = sleeper (millis{ 0 });
	rpc::server_options limits;
	limits.max_concurrent = 1;
	limits.min_service_time = millis{ 200 };
	limits.gateway_timeout = millis{ 1000 };
	rpc::http_server server (routes, limits);
	server.start ();
	rpc::http_endpoint target (server.url ());
	probe_scenario probe ("probe", target, { "GET", "/probe", "" });
	std::vector<double> rates{ 1, 2, 3, 4, 5, 6, 7, 8, 9, 10 };
	auto sweep = sweep_rates (probe, rates, 2, 11);
	ASSERT_EQ (10, sweep.points.size ());
	for (auto const & p : sweep.points)
	{
		auto const & s = sweep.reports[static_cast<std::size_t> (p.rate) - 1].stats;
		EXPECT_EQ (s.total, s.successes + s.timeouts + s.server_errors + s.transport_errors);
		if (p.rate <= 3)
		{
			EXPECT_NEAR (p.rate, p.throughput, 0.15 * p.rate) << p.rate;
		}
		if (p.rate >= 7)
		{
			EXPECT_GT (p.throughput, 3.5) << p.rate;
			EXPECT_LT (p.throughput, 5.5) << p.rate;
		}
	}
	EXPECT_GT (sweep.points[9].timeout_pct, 0);
	EXPECT_GT (*sweep.points[9].p50, 2 * *sweep.points[2].p50);
	std::ostringstream plot;
	write_plot_data (plot, sweep);
	auto text = plot.str ();
	EXPECT_EQ (11, std::count (text.begin (), text.end (), '\n'));
}

TEST (harness, parameter_errors)
{
	fixed_scenario target;
	EXPECT_EQ (errc::parameter, code_of ([&] { sweep_rates (target, {}, 1, 1); }));
	EXPECT_EQ (errc::parameter, code_of ([] { bench_blindsign ({ 64 }, 0); }));
	EXPECT_EQ (errc::parameter, code_of ([] { bench_blindsign ({ 8 }, 1); }));
	EXPECT_EQ (errc::parameter, code_of ([] { bench_blindsign ({}, 1); }));
	run_options options;
	options.rate = 0;
	EXPECT_EQ (errc::parameter, code_of ([&] { run_scenario (target, options); }));
}

TEST (harness, bench_blindsign_reports_each_size)
{
	auto points = bench_blindsign ({ 32, 64 }, 4, 5);
	ASSERT_EQ (2, points.size ());
	EXPECT_EQ (32, points[0].bits);
	EXPECT_EQ (4, points[1].iterations);
	EXPECT_GT (points[0].mean_ms, 0);
}

TEST (harness, sub_request_names)
{
	EXPECT_EQ ("request-nonce", sub_request_name ("POST", "/nonce"));
	EXPECT_EQ ("prove-owner", sub_request_name ("POST", "/entry/challenge"));
	EXPECT_EQ ("request-signature", sub_request_name ("POST", "/entry"));
	EXPECT_EQ ("verify-signature", sub_request_name ("POST", "/enter"));
	EXPECT_EQ ("verify-block", sub_request_name ("GET", "/blocks/cp/4"));
}

TEST (harness, every_scenario_runs_in_process)
{
	stack::stack_options options;
	options.bits = 64;
	options.seed = 9;
	stack::deployment target (options);
	for (auto const & name : scenario_names ())
	{
		auto s = make_scenario (name, target, 3);
		run_options run;
		run.rate = 2;
		run.duration_s = 1;
		auto report = run_scenario (*s, run);
		EXPECT_EQ (2, report.stats.successes) << name << " " << (report.records.empty () ? "" : report.records[0].error);
	}
	EXPECT_EQ (errc::parameter, code_of ([&] { make_scenario ("nope", target); }));
}

TEST (harness, access_service_sub_requests)
{
	stack::stack_options options;
	options.bits = 64;
	options.seed = 10;
	stack::deployment target (options);
	auto s = make_scenario ("access-service", target, 4);
	run_options run;
	run.rate = 3;
	run.duration_s = 1;
	auto table = size_report (run_scenario (*s, run));
	std::vector<std::string> names;
	for (auto const & row : table.rows)
	{
		names.push_back (row.name);
		EXPECT_EQ (3, row.samples);
	}
	std::sort (names.begin (), names.end ());
	EXPECT_EQ ((std::vector<std::string>{ "prove-owner", "request-nonce", "request-signature", "verify-signature" }), names);
}
