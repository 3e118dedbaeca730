#pragma once

#include <digid/blindsig.hpp>
#include <digid/issuer.hpp>
#include <digid/ledger.hpp>
#include <digid/rpc.hpp>

#include <istream>
#include <map>
#include <mutex>

/// The fare gate: single-use station nonces, admission on an AP signature,
/// journey close-out and rebate credentials for the unspent fare.
namespace digid::fareservice
{
enum class direction
{
	entry,
	exit
};

std::string_view to_string (direction value);
direction direction_from_string (std::string_view name);

struct fare_nonce
{
	bytes nonce;
	std::string station_id;
	fareservice::direction direction{ direction::entry };
	millis issued_at{ 0 };
};

void to_json (nlohmann::json & j, fare_nonce const & value);
void from_json (nlohmann::json const & j, fare_nonce & value);

class fare_table
{
public:
	explicit fare_table (std::uint32_t max_fare = 0) :
		max (max_fare)
	{
	}
	/// CSV with header `entry,exit,fare`. errc::parse with the line number on
	/// malformed rows; errc::validation when a fare exceeds max_fare or a pair of
	/// distinct stations has no fare in either direction.
	static fare_table load_csv (std::istream & in, std::uint32_t max_fare);
	static fare_table load_csv_file (std::string const & path, std::uint32_t max_fare);

	void set (std::string const & entry, std::string const & exit, std::uint32_t fare);
	/// (entry, exit), else (exit, entry); a journey back to the entry station
	/// without its own row costs max_fare. errc::not_found for unknown stations.
	std::uint32_t fare (std::string const & entry, std::string const & exit) const;
	std::uint32_t max_fare () const
	{
		return max;
	}
	std::vector<std::string> stations () const;
	void validate () const;

private:
	std::map<std::pair<std::string, std::string>, std::uint32_t> fares;
	std::uint32_t max{ 0 };
};

enum class journey_state
{
	open,
	closing,
	closed
};

std::string_view to_string (journey_state value);

struct journey_session
{
	std::string entry_tag;
	std::string entry_station;
	millis entry_time{ 0 };
	journey_state state{ journey_state::open };
	std::string exit_station;
	std::string exit_nonce;
	std::uint32_t rebate_amount{ 0 };
	std::string rebate_session;
	std::int64_t rebate_interval{ 0 };
};

struct finish_result
{
	fare_nonce z;
	std::uint32_t rebate_amount{ 0 };
	std::int64_t rebate_interval{ 0 };
	std::string rebate_session;
	std::string rebate_key;
	blindsig::challenge rebate_challenge;
};

struct settle_result
{
	blindsig::proof proof;
	std::uint32_t amount{ 0 };
	std::int64_t interval{ 0 };
	std::string issuer_id;
};

struct service_options
{
	std::string service_id{ "svc" };
	millis journey_timeout{ std::chrono::hours{ 4 } };
	millis interval_length{ std::chrono::seconds{ 60 } };
	/// Rebate block publication period; 0 disables the timer.
	millis publish_period{ 0 };
};

class fare_service
{
public:
	fare_service (blindsig::group_params params, fare_table fares, std::vector<blindsig::public_key> trusted_aps, ledger::ledger & ledger, clock & time, blindsig::random_source random, service_options options = {});

	std::string const & id () const
	{
		return options.service_id;
	}

	fare_nonce issue_nonce (direction dir, std::string const & station_id);
	/// errc::denied for an unknown, used or exit nonce and for a signature under no trusted AP key.
	journey_session admit_entry (blindsig::signature const & ap_signature, bytes const & y);
	/// errc::denied unless a journey is open under the digest of `ap_signature`.
	finish_result finish (blindsig::signature const & ap_signature, std::string const & exit_station);
	/// errc::denied for an unbound or used z and an AP(z) under no trusted key.
	settle_result settle_exit (blindsig::signature const & ap_signature_z, bytes const & z, blindsig::integer const & e);

	/// Forfeits journeys older than the timeout and drops stale nonces; returns journeys closed.
	std::size_t expire_sessions ();
	/// Everything the service holds about journeys and nonces.
	nlohmann::json session_snapshot () const;
	std::optional<journey_session> journey (std::string const & entry_tag) const;

	issuer::issuer & rebates ()
	{
		return rebate_issuer;
	}
	fare_table const & fares () const
	{
		return table;
	}
	rpc::router const & routes () const
	{
		return router;
	}

private:
	bool trusted (bytes const & message, blindsig::signature const & sig) const;
	std::size_t expire_locked (millis now);
	void install_routes ();

	fare_table table;
	std::vector<blindsig::public_key> trusted_aps;
	clock & time;
	service_options options;
	issuer::issuer rebate_issuer;

	mutable std::mutex mutex;
	blindsig::random_source random;
	std::map<std::string, fare_nonce> pending_nonces;
	std::map<std::string, std::string> exit_binding;
	std::map<std::string, journey_session> journeys;
	std::size_t issued_since_purge{ 0 };

	rpc::router router;
};
}
