#pragma once

#include <digid/fareservice.hpp>
#include <digid/gateway.hpp>
#include <digid/issuer.hpp>
#include <digid/ledger.hpp>
#include <digid/rpc.hpp>

#include <memory>
#include <optional>

/// A complete local deployment: ledger, CP, one or more APs and a fare
/// service, reachable in-process or over loopback HTTP.
namespace digid::stack
{
/// Stations A..E, fare |i - j| + 1 capped at max_fare 5.
fareservice::fare_table default_fares ();

struct stack_options
{
	unsigned bits{ 256 };
	/// 0 draws all key material from the OS; anything else is reproducible.
	std::uint64_t seed{ 0 };
	std::optional<blindsig::group_params> params;
	std::size_t ap_count{ 1 };
	std::optional<fareservice::fare_table> fares;
	ledger::ledger_options ledger;
	issuer::issuer_options issuer;
	gateway::gateway_options gateway;
	fareservice::service_options service;
	bool http{ false };
	rpc::server_options cp_server;
	rpc::server_options ap_server;
	rpc::server_options service_server;
	/// Client-side timeout for HTTP endpoints.
	millis client_timeout{ std::chrono::seconds{ 60 } };
};

class deployment
{
public:
	explicit deployment (stack_options options = {}, clock & time = default_clock ());
	~deployment ();
	deployment (deployment const &) = delete;
	deployment & operator= (deployment const &) = delete;

	blindsig::group_params const & params () const
	{
		return group;
	}
	ledger::ledger & ledger ()
	{
		return *book;
	}
	issuer::issuer & cp ()
	{
		return *issuer;
	}
	gateway::gateway & ap (std::size_t index = 0)
	{
		return *gateways.at (index);
	}
	std::size_t ap_count () const
	{
		return gateways.size ();
	}
	fareservice::fare_service & service ()
	{
		return *fares;
	}

	rpc::endpoint & cp_endpoint ()
	{
		return *cp_link;
	}
	rpc::endpoint & ap_endpoint (std::size_t index = 0)
	{
		return *ap_links.at (index);
	}
	rpc::endpoint & service_endpoint ()
	{
		return *service_link;
	}
	/// Empty unless the deployment serves HTTP.
	std::string cp_url () const;
	std::string ap_url (std::size_t index = 0) const;
	std::string service_url () const;

private:
	blindsig::group_params group;
	std::unique_ptr<ledger::ledger> book;
	std::unique_ptr<issuer::issuer> issuer;
	std::vector<std::unique_ptr<gateway::gateway>> gateways;
	std::unique_ptr<fareservice::fare_service> fares;
	std::unique_ptr<rpc::http_server> cp_server;
	std::vector<std::unique_ptr<rpc::http_server>> ap_servers;
	std::unique_ptr<rpc::http_server> service_server;
	std::unique_ptr<rpc::endpoint> cp_link;
	std::vector<std::unique_ptr<rpc::endpoint>> ap_links;
	std::unique_ptr<rpc::endpoint> service_link;
};
}
