#include "cli_support.hpp"

#include <digid/harness.hpp>

#include <sstream>

using namespace digid;

namespace
{
struct deployment_flags
{
	unsigned bits{ 256 };
	std::uint64_t seed{ 0 };
	std::size_t ap_max_concurrent{ 0 };
	long ap_min_service_ms{ 0 };
	long gateway_timeout_ms{ 60'000 };
	long client_timeout_ms{ 60'000 };

	void attach (CLI::App & cmd)
	{
		cmd.add_option ("--bits", bits, "Group size in bits");
		cmd.add_option ("--stack-seed", seed, "Key material seed, 0 for the OS RNG");
		cmd.add_option ("--ap-max-concurrent", ap_max_concurrent, "AP requests served at once, 0 unlimited");
		cmd.add_option ("--ap-min-service-ms", ap_min_service_ms, "Minimum AP service time");
		cmd.add_option ("--gateway-timeout-ms", gateway_timeout_ms, "Server-side queueing timeout");
		cmd.add_option ("--client-timeout-ms", client_timeout_ms, "Per-request client timeout");
	}

	stack::stack_options options () const
	{
		stack::stack_options out;
		out.bits = bits;
		out.seed = seed;
		out.http = true;
		out.client_timeout = millis{ client_timeout_ms };
		for (auto * server : { &out.cp_server, &out.ap_server, &out.service_server })
		{
			server->gateway_timeout = millis{ gateway_timeout_ms };
		}
		out.ap_server.max_concurrent = ap_max_concurrent;
		out.ap_server.min_service_time = millis{ ap_min_service_ms };
		return out;
	}
};

void write_latencies (std::string const & path, harness::scenario_report const & report)
{
	if (path.empty ())
	{
		return;
	}
	std::ostringstream out;
	out << "# index scheduled_ms latency_ms outcome\n";
	for (auto const & r : report.records)
	{
		out << r.index << ' ' << r.scheduled_ms << ' ' << r.latency_ms << ' ' << to_string (r.result) << '\n';
	}
	cli::emit (path, out.str ());
}

bool check (bool ok, std::string const & what)
{
	std::cerr << (ok ? "PASS " : "FAIL ") << what << '\n';
	return ok;
}
}

int main (int argc, char ** argv)
{
	CLI::App app{ "Load generator and benchmarks" };
	app.require_subcommand (1);

	deployment_flags scenario_stack;
	std::string name{ "access-service" };
	double rate{ 1 };
	double duration{ 60 };
	std::uint64_t seed{ 1 };
	std::string out_path;
	std::string plot_path;
	bool assert_thresholds{ false };
	bool poisson{ false };
	bool records{ false };
	auto * scenario_cmd = app.add_subcommand ("scenario", "Run one scenario at a fixed rate");
	scenario_cmd->add_option ("--name", name, "Scenario name")->check (CLI::IsMember (harness::scenario_names ()));
	scenario_cmd->add_option ("--rate", rate, "Requests per second");
	scenario_cmd->add_option ("--duration", duration, "Window in seconds");
	scenario_cmd->add_option ("--seed", seed, "Schedule seed");
	scenario_cmd->add_option ("--out", out_path, "JSON summary file");
	scenario_cmd->add_option ("--plot", plot_path, "Per-request latency columns");
	scenario_cmd->add_flag ("--poisson", poisson, "Exponential inter-arrival times");
	scenario_cmd->add_flag ("--records", records, "Include every request in the JSON");
	scenario_cmd->add_flag ("--assert", assert_thresholds, "Exit nonzero unless p50 < 500 ms with no failures");
	scenario_stack.attach (*scenario_cmd);

	deployment_flags sweep_stack;
	std::string sweep_name{ "access-service" };
	std::string rates_text{ "1..10" };
	double sweep_duration{ 60 };
	std::string sweep_out;
	std::string sweep_plot;
	bool sweep_assert{ false };
	auto * sweep_cmd = app.add_subcommand ("sweep", "Run one scenario over a list of rates");
	sweep_cmd->add_option ("--name", sweep_name, "Scenario name")->check (CLI::IsMember (harness::scenario_names ()));
	sweep_cmd->add_option ("--rates", rates_text, "1..10 or 1,2,4");
	sweep_cmd->add_option ("--duration", sweep_duration, "Window per rate in seconds");
	sweep_cmd->add_option ("--seed", seed, "Schedule seed");
	sweep_cmd->add_option ("--out", sweep_out, "JSON summary file");
	sweep_cmd->add_option ("--plot", sweep_plot, "Rate/throughput/failure columns");
	sweep_cmd->add_flag ("--assert", sweep_assert, "Exit nonzero unless the lowest rate is tracked and throughput never exceeds the offered rate");
	sweep_stack.attach (*sweep_cmd);

	std::string sizes_text{ "128,256,512,1024" };
	std::size_t iterations{ 100 };
	std::string bench_out;
	std::string bench_plot;
	bool bench_assert{ false };
	auto * blindsign_cmd = app.add_subcommand ("blindsign", "Time in-process blind signing per group size");
	blindsign_cmd->add_option ("--sizes", sizes_text, "Comma-separated bit sizes");
	blindsign_cmd->add_option ("--iters", iterations, "Signatures per size");
	blindsign_cmd->add_option ("--seed", seed, "RNG seed");
	blindsign_cmd->add_option ("--out", bench_out, "JSON file");
	blindsign_cmd->add_option ("--plot", bench_plot, "bits/mean_ms columns");
	blindsign_cmd->add_flag ("--assert", bench_assert, "Exit nonzero unless 256-bit mean is in [0.131, 13.1] ms and means increase with size");

	std::string rods_path;
	auto * load_cmd = app.add_subcommand ("loadmodel", "Derive load levels from a RODS CSV");
	load_cmd->add_option ("--rods", rods_path, "CSV with station_id,interval_start,arrivals")->required ();

	CLI11_PARSE (app, argc, argv);

	return cli::guarded ([&] {
		if (*scenario_cmd)
		{
			stack::deployment target (scenario_stack.options ());
			auto scenario = harness::make_scenario (name, target, seed);
			harness::run_options options;
			options.rate = rate;
			options.duration_s = duration;
			options.seed = seed;
			options.poisson = poisson;
			options.timeout = millis{ scenario_stack.client_timeout_ms };
			auto report = harness::run_scenario (*scenario, options);
			auto j = harness::to_json (report, records);
			j["sizes"] = harness::to_json (harness::size_report (report));
			cli::emit (out_path, j.dump (2));
			write_latencies (plot_path, report);
			if (!assert_thresholds)
			{
				return 0;
			}
			auto const & s = report.stats;
			bool ok = check (s.p50 && *s.p50 < 500.0, "p50 below 500 ms");
			ok = check (s.successes == s.total, "no failed requests") && ok;
			return ok ? 0 : 2;
		}
		if (*sweep_cmd)
		{
			stack::deployment target (sweep_stack.options ());
			auto scenario = harness::make_scenario (sweep_name, target, seed);
			auto rates = cli::parse_list<double> (rates_text);
			auto sweep = harness::sweep_rates (*scenario, rates, sweep_duration, seed, millis{ sweep_stack.client_timeout_ms });
			nlohmann::json j{ { "scenario", sweep.name }, { "reports", nlohmann::json::array () } };
			for (auto const & report : sweep.reports)
			{
				j["reports"].push_back (harness::to_json (report));
			}
			cli::emit (sweep_out, j.dump (2));
			if (!sweep_plot.empty ())
			{
				std::ostringstream plot;
				harness::write_plot_data (plot, sweep);
				cli::emit (sweep_plot, plot.str ());
			}
			if (!sweep_assert)
			{
				return 0;
			}
			auto const & first = sweep.points.front ();
			bool ok = check (first.throughput >= 0.9 * first.rate, "lowest rate is tracked");
			for (auto const & p : sweep.points)
			{
				ok = check (p.throughput <= 1.05 * p.rate, "throughput within offered rate " + std::to_string (p.rate)) && ok;
			}
			return ok ? 0 : 2;
		}
		if (*blindsign_cmd)
		{
			auto points = harness::bench_blindsign (cli::parse_list<unsigned> (sizes_text), iterations, seed);
			nlohmann::json j = nlohmann::json::array ();
			std::ostringstream plot;
			plot << "# bits mean_ms\n";
			for (auto const & p : points)
			{
				j.push_back ({ { "bits", p.bits }, { "iterations", p.iterations }, { "mean_ms", p.mean_ms } });
				plot << p.bits << ' ' << p.mean_ms << '\n';
			}
			cli::emit (bench_out, j.dump (2));
			if (!bench_plot.empty ())
			{
				cli::emit (bench_plot, plot.str ());
			}
			if (!bench_assert)
			{
				return 0;
			}
			bool ok = true;
			for (std::size_t i = 0; i < points.size (); ++i)
			{
				if (points[i].bits == 256)
				{
					ok = check (points[i].mean_ms >= 0.131 && points[i].mean_ms <= 13.1, "256-bit mean within [0.131, 13.1] ms") && ok;
				}
				if (i > 0)
				{
					ok = check (points[i].mean_ms > points[i - 1].mean_ms, "mean increases at " + std::to_string (points[i].bits) + " bits") && ok;
				}
			}
			return ok ? 0 : 2;
		}
		auto model = harness::load_rods_file (rods_path);
		cli::emit ("", nlohmann::json{ { "rows", model.rows.size () }, { "load_avg", model.load_avg }, { "load_max", model.load_max } }.dump (2));
		return 0;
	});
}
