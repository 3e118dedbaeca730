#pragma once

#include <digid/rpc.hpp>
#include <digid/stack.hpp>

#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// Open-loop load generation and the statistics reported for it.
namespace digid::harness
{
struct rods_row
{
	std::string station_id;
	std::string interval_start;
	std::int64_t arrivals{ 0 };
};

/// Arrivals per 15-minute interval reduced to request rates (req/s, rounded up).
struct load_model
{
	std::vector<rods_row> rows;
	std::uint64_t load_avg{ 0 };
	std::uint64_t load_max{ 0 };
};

/// CSV with header `station_id,interval_start,arrivals`. errc::parse names the
/// offending line; negative arrivals are errc::validation.
load_model load_rods (std::istream & in);
load_model load_rods_file (std::string const & path);
/// load_avg = ceil(sum_s max_t I / (|S| * 900)), load_max = ceil(max_s max_t I / 900).
load_model derive_load (std::vector<rods_row> rows);

enum class outcome
{
	success,
	timeout,
	server_error,
	transport_error
};

std::string_view to_string (outcome value);
outcome classify (errc code);
outcome classify (rpc::response const & res);

struct sub_request
{
	std::string name;
	std::size_t request_bytes{ 0 };
	std::size_t response_bytes{ 0 };
};

/// What one scenario iteration reports back to the runner.
struct attempt
{
	outcome result{ outcome::success };
	/// Set when only part of the iteration is timed; otherwise the runner's wall time is used.
	std::optional<double> latency_ms;
	std::vector<sub_request> parts;
	std::string error;
};

struct request_record
{
	std::size_t index{ 0 };
	double scheduled_ms{ 0 };
	double latency_ms{ 0 };
	double completed_ms{ 0 };
	outcome result{ outcome::success };
	std::vector<sub_request> parts;
	std::string error;
};

/// Latency fields cover successful requests only and are empty without any.
struct summary
{
	std::size_t total{ 0 };
	std::size_t successes{ 0 };
	std::size_t timeouts{ 0 };
	std::size_t server_errors{ 0 };
	std::size_t transport_errors{ 0 };
	std::optional<double> min;
	std::optional<double> p25;
	std::optional<double> p50;
	std::optional<double> p75;
	std::optional<double> p95;
	std::optional<double> p99;
	std::optional<double> max;
	std::optional<double> mean;
	std::optional<double> stddev;
	std::optional<double> skewness;
	double throughput{ 0 };
};

/// Nearest rank: the value at position ceil(p/100 * n) of the sorted sample.
double percentile (std::span<double const> sorted, double p);
/// Population sigma; S_P = 3 (mean - median) / sigma, 0 when sigma is 0.
/// Throughput is successes over the longer of the window and the time to the last completion.
summary summarize (std::span<request_record const> records, double duration_s);

class scenario
{
public:
	virtual ~scenario () = default;
	virtual std::string name () const = 0;
	/// Untimed set-up for `count` iterations, run before the window opens.
	virtual void prepare (std::size_t)
	{
	}
	virtual attempt run (std::size_t index) = 0;
};

struct run_options
{
	double rate{ 1 };
	double duration_s{ 60 };
	std::uint64_t seed{ 1 };
	/// Successful iterations slower than this count as timeouts.
	millis timeout{ std::chrono::seconds{ 60 } };
	/// Exponential inter-arrival times instead of uniform within each second.
	bool poisson{ false };
};

/// Issue offsets in milliseconds from the window start, ascending.
std::vector<double> schedule (run_options const & options);

struct scenario_report
{
	std::string name;
	double rate{ 0 };
	double duration_s{ 0 };
	std::uint64_t seed{ 0 };
	std::vector<request_record> records;
	summary stats;
};

/// errc::parameter unless rate >= 1 and duration >= 1.
scenario_report run_scenario (scenario & target, run_options const & options);

struct sweep_point
{
	double rate{ 0 };
	double throughput{ 0 };
	double timeout_pct{ 0 };
	double server_error_pct{ 0 };
	double transport_error_pct{ 0 };
	std::optional<double> p50;
};

struct sweep_result
{
	std::string name;
	std::vector<scenario_report> reports;
	std::vector<sweep_point> points;
};

/// errc::parameter for an empty rate list.
sweep_result sweep_rates (scenario & target, std::vector<double> const & rates, double duration_s, std::uint64_t seed, millis timeout = std::chrono::seconds{ 60 });

struct blindsign_point
{
	unsigned bits{ 0 };
	std::size_t iterations{ 0 };
	double mean_ms{ 0 };
};

/// Times challenge, blinding, response and unblinding in-process, per group size.
std::vector<blindsign_point> bench_blindsign (std::vector<unsigned> const & sizes, std::size_t iterations, std::uint64_t seed = 1);

struct size_row
{
	std::string name;
	std::size_t samples{ 0 };
	double mean_response_bytes{ 0 };
	double mean_request_bytes{ 0 };
};

struct size_table
{
	std::vector<size_row> rows;
	double total_response_bytes{ 0 };
	double total_request_bytes{ 0 };
};

/// Mean bytes per sub-request type over successful iterations.
size_table size_report (scenario_report const & report);

/// Sub-request label for a protocol call, e.g. POST /entry -> request-signature.
std::string sub_request_name (std::string const & method, std::string const & path);

/// One request per iteration against a fixed endpoint.
class probe_scenario final : public scenario
{
public:
	probe_scenario (std::string name, rpc::endpoint & target, rpc::request request);
	std::string name () const override
	{
		return label;
	}
	attempt run (std::size_t index) override;

private:
	std::string label;
	rpc::endpoint & target;
	rpc::request request;
};

std::vector<std::string> const & scenario_names ();
/// One of request-nonce, prove-ownership, request-signature, verify-signature,
/// verify-block, access-service, run against `target`.
std::unique_ptr<scenario> make_scenario (std::string const & name, stack::deployment & target, std::uint64_t seed = 1);

nlohmann::json to_json (summary const & value);
nlohmann::json to_json (scenario_report const & value, bool with_records = false);
nlohmann::json to_json (size_table const & value);
/// Whitespace-separated columns: rate throughput timeout% server% transport% p50.
void write_plot_data (std::ostream & out, sweep_result const & sweep);
}
