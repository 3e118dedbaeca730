#include "cli_support.hpp"

#include <digid/stack.hpp>
#include <digid/wire.hpp>

#include <atomic>
#include <csignal>
#include <sstream>
#include <thread>

using namespace digid;

namespace
{
std::atomic<bool> stopping{ false };

void on_signal (int)
{
	stopping = true;
}
}

int main (int argc, char ** argv)
{
	CLI::App app{ "Local deployment: ledger, CP, APs and fare service over HTTP" };
	app.require_subcommand (1);

	unsigned bits{ 256 };
	std::uint64_t seed{ 0 };
	std::string host{ "127.0.0.1" };
	int cp_port{ 8081 };
	int ap_port{ 8082 };
	int service_port{ 8090 };
	std::size_t ap_count{ 1 };
	std::string fares_path;
	std::uint32_t max_fare{ 5 };
	std::string ledger_log;
	long interval_s{ 60 };
	long sync_ms{ 5000 };
	long publication_ms{ 0 };
	std::string config_out;
	auto * serve = app.add_subcommand ("serve", "Start every actor and block until interrupted");
	serve->add_option ("--bits", bits, "Group size in bits");
	serve->add_option ("--seed", seed, "Key material seed, 0 for the OS RNG");
	serve->add_option ("--host", host, "Bind address");
	serve->add_option ("--cp-port", cp_port, "CP port");
	serve->add_option ("--ap-port", ap_port, "First AP port; further APs take the following ports");
	serve->add_option ("--service-port", service_port, "Fare service port");
	serve->add_option ("--aps", ap_count, "Number of APs");
	serve->add_option ("--fares", fares_path, "Fare CSV with entry,exit,fare")->check (CLI::ExistingFile);
	serve->add_option ("--max-fare", max_fare, "Maximum fare held at entry");
	serve->add_option ("--ledger-log", ledger_log, "Append-only ledger log");
	serve->add_option ("--interval", interval_s, "Interval length in seconds");
	serve->add_option ("--sync-ms", sync_ms, "AP spent-cache sync period");
	serve->add_option ("--publication-ms", publication_ms, "AP spend publication period, 0 publishes during exit");
	serve->add_option ("--wallet-config", config_out, "Write a wallet config pointing at this deployment");

	unsigned vector_bits{ 256 };
	std::size_t vector_count{ 4 };
	std::uint64_t vector_seed{ 1 };
	std::string vector_out;
	auto * vectors = app.add_subcommand ("vectors", "Export blind-signature test vectors");
	vectors->add_option ("--bits", vector_bits, "Group size in bits");
	vectors->add_option ("--count", vector_count, "Signatures to export");
	vectors->add_option ("--seed", vector_seed, "RNG seed");
	vectors->add_option ("--out", vector_out, "Output file, stdout when omitted");

	CLI11_PARSE (app, argc, argv);

	return cli::guarded ([&] {
		if (*vectors)
		{
			auto random = blindsig::random_source::seeded (vector_seed);
			auto params = blindsig::generate_group (vector_bits, random);
			auto key = blindsig::keygen (params, random);
			std::vector<blindsig::test_vector> out;
			for (std::size_t i = 0; i < vector_count; ++i)
			{
				auto message = random.draw_bytes (32);
				auto session = blindsig::signer_initial_challenge (key, random);
				auto [user, e] = blindsig::user_blind (key.pub, message, session.challenge (), random);
				auto response = blindsig::signer_respond (key, session, e);
				auto sig = blindsig::user_unblind (user, response, key.pub);
				out.push_back ({ key.pub, message, { session.challenge (), e, response }, sig });
			}
			std::ostringstream text;
			blindsig::write_test_vectors (text, out);
			auto body = text.str ();
			if (!body.empty () && body.back () == '\n')
			{
				body.pop_back ();
			}
			cli::emit (vector_out, body);
			return 0;
		}
		stack::stack_options options;
		options.bits = bits;
		options.seed = seed;
		options.http = true;
		options.ap_count = ap_count;
		options.issuer.interval_length = std::chrono::seconds{ interval_s };
		options.service.interval_length = std::chrono::seconds{ interval_s };
		options.gateway.sync_period = millis{ sync_ms };
		options.gateway.publication_period = millis{ publication_ms };
		if (!ledger_log.empty ())
		{
			options.ledger.log_path = ledger_log;
		}
		if (!fares_path.empty ())
		{
			options.fares = fareservice::fare_table::load_csv_file (fares_path, max_fare);
		}
		for (auto * server : { &options.cp_server, &options.ap_server, &options.service_server })
		{
			server->host = host;
		}
		options.cp_server.port = cp_port;
		options.ap_server.port = ap_port;
		options.service_server.port = service_port;
		stack::deployment target (options);
		nlohmann::json info{ { "cp", target.cp_url () }, { "service", target.service_url () }, { "aps", nlohmann::json::array () }, { "trusted_ap_keys", nlohmann::json::array () } };
		for (std::size_t i = 0; i < target.ap_count (); ++i)
		{
			info["aps"].push_back (target.ap_url (i));
			info["trusted_ap_keys"].push_back (target.ap (i).public_key ().fingerprint ());
		}
		info["ap"] = info["aps"][0];
		std::cout << info.dump (2) << std::endl;
		if (!config_out.empty ())
		{
			cli::emit (config_out, info.dump (2));
		}
		std::signal (SIGINT, on_signal);
		std::signal (SIGTERM, on_signal);
		while (!stopping)
		{
			target.cp ().tick ();
			std::this_thread::sleep_for (std::chrono::milliseconds{ 200 });
		}
		return 0;
	});
}
