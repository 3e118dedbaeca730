#include <digid/stack.hpp>

namespace digid::stack
{
fareservice::fare_table default_fares ()
{
	fareservice::fare_table table{ 5 };
	std::string const names = "ABCDE";
	for (std::size_t i = 0; i < names.size (); ++i)
	{
		for (std::size_t j = 0; j < names.size (); ++j)
		{
			auto hops = static_cast<std::uint32_t> (i > j ? i - j : j - i);
			table.set (std::string (1, names[i]), std::string (1, names[j]), std::min<std::uint32_t> (hops + 1, 5));
		}
	}
	table.validate ();
	return table;
}

namespace
{
	blindsig::random_source source (std::uint64_t seed, std::uint64_t salt)
	{
		return seed == 0 ? blindsig::random_source::system () : blindsig::random_source::seeded (seed * 1000 + salt);
	}

	template <typename Server>
	std::string url_of (Server const & server)
	{
		return server ? server->url () : std::string{};
	}
}

deployment::deployment (stack_options options, clock & time)
{
	if (options.ap_count == 0)
	{
		fail (errc::parameter, "a deployment needs at least one AP");
	}
	auto keys = source (options.seed, 1);
	group = options.params ? *options.params : blindsig::generate_group (options.bits, keys);
	book = std::make_unique<ledger::ledger> (time, options.ledger);
	issuer = std::make_unique<issuer::issuer> (group, *book, time, source (options.seed, 2), options.issuer);
	issuer->ensure_key (issuer->current_interval ());
	std::vector<blindsig::public_key> trusted;
	for (std::size_t i = 0; i < options.ap_count; ++i)
	{
		auto settings = options.gateway;
		if (options.ap_count > 1)
		{
			settings.ap_id += std::to_string (i + 1);
		}
		gateways.push_back (std::make_unique<gateway::gateway> (blindsig::keygen (group, keys), *book, time, source (options.seed, 10 + i), settings));
		trusted.push_back (gateways.back ()->public_key ());
	}
	fares = std::make_unique<fareservice::fare_service> (group, options.fares ? *options.fares : default_fares (), trusted, *book, time, source (options.seed, 3), options.service);

	if (!options.http)
	{
		cp_link = std::make_unique<rpc::local_endpoint> (issuer->routes ());
		for (auto const & ap : gateways)
		{
			ap_links.push_back (std::make_unique<rpc::local_endpoint> (ap->routes ()));
		}
		service_link = std::make_unique<rpc::local_endpoint> (fares->routes ());
		return;
	}
	auto serve = [&] (rpc::router const & routes, rpc::server_options settings) {
		auto server = std::make_unique<rpc::http_server> (routes, settings);
		server->start ();
		return server;
	};
	cp_server = serve (issuer->routes (), options.cp_server);
	cp_link = std::make_unique<rpc::http_endpoint> (cp_server->url (), options.client_timeout);
	for (std::size_t i = 0; i < gateways.size (); ++i)
	{
		auto settings = options.ap_server;
		if (settings.port != 0)
		{
			settings.port += static_cast<int> (i);
		}
		ap_servers.push_back (serve (gateways[i]->routes (), settings));
		ap_links.push_back (std::make_unique<rpc::http_endpoint> (ap_servers.back ()->url (), options.client_timeout));
	}
	service_server = serve (fares->routes (), options.service_server);
	service_link = std::make_unique<rpc::http_endpoint> (service_server->url (), options.client_timeout);
}

deployment::~deployment ()
{
	if (service_server)
	{
		service_server->stop ();
	}
	for (auto & server : ap_servers)
	{
		server->stop ();
	}
	if (cp_server)
	{
		cp_server->stop ();
	}
}

std::string deployment::cp_url () const
{
	return url_of (cp_server);
}

std::string deployment::ap_url (std::size_t index) const
{
	return index < ap_servers.size () ? ap_servers[index]->url () : std::string{};
}

std::string deployment::service_url () const
{
	return url_of (service_server);
}
}
