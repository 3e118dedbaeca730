#include "cli_support.hpp"

#include <digid/wallet.hpp>
#include <digid/wire.hpp>

#include <filesystem>

using namespace digid;

namespace
{
// Endpoint URLs, store location and trusted AP key fingerprints.
struct wallet_config
{
	std::string cp;
	std::string ap;
	std::string service;
	std::string store{ "wallet.ndjson" };
	std::string user_ref{ "wallet" };
	std::set<std::string> trusted_ap_keys;
	bool verify_after_entry{ true };
};

wallet_config load_config (std::string const & path)
{
	wallet_config out;
	if (!std::filesystem::exists (path))
	{
		return out;
	}
	std::ifstream in (path);
	auto j = nlohmann::json::parse (in, nullptr, false);
	if (!j.is_object ())
	{
		fail (errc::parse, "config " + path + " is not a JSON object");
	}
	out.cp = j.value ("cp", out.cp);
	out.ap = j.value ("ap", out.ap);
	out.service = j.value ("service", out.service);
	out.store = j.value ("store", out.store);
	out.user_ref = j.value ("user_ref", out.user_ref);
	out.verify_after_entry = j.value ("verify_after_entry", out.verify_after_entry);
	if (j.contains ("trusted_ap_keys"))
	{
		out.trusted_ap_keys = j["trusted_ap_keys"].get<std::set<std::string>> ();
	}
	return out;
}

std::string pick (std::string const & given, std::string const & fallback, char const * what)
{
	auto out = given.empty () ? fallback : given;
	if (out.empty ())
	{
		fail (errc::parameter, std::string ("no ") + what + " URL given or configured");
	}
	return out;
}

nlohmann::json describe (wallet::wallet_token const & t)
{
	nlohmann::json out{ { "id", t.id }, { "issuer", t.issuer_id }, { "interval", t.interval }, { "value", t.value }, { "state", to_string (t.state) } };
	if (t.anonymity_set)
	{
		out["anonymity_set"] = *t.anonymity_set;
	}
	if (!t.discrepancy.empty ())
	{
		out["discrepancy"] = t.discrepancy;
	}
	return out;
}
}

int main (int argc, char ** argv)
{
	CLI::App app{ "Fare token wallet" };
	app.require_subcommand (1);
	std::string config_path{ "wallet.json" };
	std::string store_override;
	app.add_option ("--config", config_path, "Config JSON with endpoint URLs and trusted AP keys");
	app.add_option ("--store", store_override, "Wallet store file");

	std::string cp;
	std::size_t count{ 1 };
	auto * acquire = app.add_subcommand ("acquire", "Buy tokens from a CP");
	acquire->add_option ("--cp", cp, "CP URL");
	acquire->add_option ("--count", count, "Number of tokens")->required ();

	std::string token;
	std::string ap;
	auto * verify = app.add_subcommand ("verify", "Audit a token's anonymity set");
	verify->add_option ("--token", token, "Token id")->required ();
	verify->add_option ("--ap", ap, "AP URL");

	std::string service;
	std::string tokens;
	std::string station{ "A" };
	auto * enter = app.add_subcommand ("enter", "Enter through a gate");
	enter->add_option ("--service", service, "Fare service URL");
	enter->add_option ("--ap", ap, "AP URL");
	enter->add_option ("--tokens", tokens, "Comma-separated token ids")->required ();
	enter->add_option ("--station", station, "Entry station");

	std::string ticket;
	auto * exit_cmd = app.add_subcommand ("exit", "Leave through a gate and collect the rebate");
	exit_cmd->add_option ("--ticket", ticket, "Journey ticket id")->required ();
	exit_cmd->add_option ("--service", service, "Fare service URL");
	exit_cmd->add_option ("--ap", ap, "AP URL");
	exit_cmd->add_option ("--station", station, "Exit station");

	auto * ls = app.add_subcommand ("ls", "List tokens and open tickets");

	CLI11_PARSE (app, argc, argv);

	return cli::guarded ([&] {
		auto config = load_config (config_path);
		wallet::wallet_options options;
		options.store = store_override.empty () ? config.store : store_override;
		options.user_ref = config.user_ref;
		options.trusted_ap_keys = config.trusted_ap_keys;
		options.verify_after_entry = config.verify_after_entry;
		wallet::wallet purse (blindsig::random_source::system (), default_clock (), options);
		nlohmann::json out;
		if (*acquire)
		{
			rpc::http_endpoint target (pick (cp, config.cp, "CP"));
			out = purse.acquire_tokens (target, count);
		}
		else if (*verify)
		{
			rpc::http_endpoint target (pick (ap, config.ap, "AP"));
			out = { { "token", token }, { "anonymity_set", purse.verify_anonymity_set (token, target) } };
		}
		else if (*enter)
		{
			rpc::http_endpoint svc (pick (service, config.service, "service"));
			rpc::http_endpoint gate (pick (ap, config.ap, "AP"));
			auto opened = purse.enter (svc, gate, cli::split (tokens), station);
			out = { { "ticket", opened.id }, { "station", opened.entry_station }, { "tokens", opened.tokens } };
		}
		else if (*exit_cmd)
		{
			rpc::http_endpoint svc (pick (service, config.service, "service"));
			rpc::http_endpoint gate (pick (ap, config.ap, "AP"));
			out = { { "rebates", purse.exit (svc, gate, ticket, station) } };
		}
		else if (*ls)
		{
			out = { { "tokens", nlohmann::json::array () }, { "tickets", nlohmann::json::array () } };
			for (auto const & t : purse.tokens ())
			{
				out["tokens"].push_back (describe (t));
			}
			for (auto const & t : purse.tickets ())
			{
				out["tickets"].push_back ({ { "id", t.id }, { "station", t.entry_station }, { "tokens", t.tokens } });
			}
		}
		std::cout << out.dump (2) << '\n';
		return 0;
	});
}
