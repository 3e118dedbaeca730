#pragma once

#include <digid/blindsig.hpp>
#include <digid/ledger.hpp>
#include <digid/rpc.hpp>
#include <digid/token.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_set>

/// Authenticating Party: checks credentials and ownership, escrows tokens on
/// entry, finalises them on exit, and blind-signs the gate's nonces.
namespace digid::gateway
{
/// One credential as shown to the AP.
struct presented_token
{
	std::string issuer_id;
	std::int64_t interval{ 0 };
	bytes message;
	blindsig::signature credential;
	blindsig::ownership_proof ownership;
};

void to_json (nlohmann::json & j, presented_token const & value);
void from_json (nlohmann::json const & j, presented_token & value);

struct opened_session
{
	std::string session_id;
	bytes ownership_challenge;
	blindsig::challenge challenge;
	std::string key_fingerprint;
	millis expires_at{ 0 };
};

struct receipt
{
	std::string token_id;
	ledger::token_state state{ ledger::token_state::fresh };
	millis recorded_at{ 0 };
};

struct signed_result
{
	blindsig::proof proof;
	std::vector<receipt> receipts;
};

struct escrow_entry
{
	std::vector<std::string> token_ids;
	std::string session_tag;
	millis created_at{ 0 };
};

struct gateway_options
{
	std::string ap_id{ "ap" };
	millis ownership_ttl{ std::chrono::seconds{ 30 } };
	/// 0 writes spends to the ledger during the exit call; otherwise they are
	/// queued and flushed on this period.
	millis publication_period{ 0 };
	/// Spent-cache pull period; 0 disables the timer.
	millis sync_period{ std::chrono::seconds{ 5 } };
};

class gateway
{
public:
	gateway (blindsig::signer_key key, ledger::ledger & ledger, clock & time, blindsig::random_source random, gateway_options options = {});
	~gateway ();

	std::string const & id () const
	{
		return options.ap_id;
	}
	blindsig::public_key const & public_key () const
	{
		return key.pub;
	}

	/// Relays the ledger block unmodified; errc::not_found when absent.
	ledger::proof_block serve_proof_block (std::string const & cp_id, std::int64_t interval) const;

	/// Opens a one-shot blind-sign session for [y] or [z] together with a fresh ownership challenge.
	opened_session open_session ();

	/// errc::denied for an unknown or expired session and for any credential or
	/// ownership failure; errc::conflict for an escrowed token and errc::double_spend
	/// for a spent one. The proof is produced only after the escrow commits.
	signed_result entry (std::string const & session_id, std::vector<presented_token> const & tokens, blindsig::integer const & e);
	/// errc::not_escrowed when a token was never escrowed; errc::double_spend when
	/// the cache or the ledger already has it spent.
	signed_result exit (std::string const & session_id, std::vector<presented_token> const & tokens, blindsig::integer const & e);

	/// Flushes queued spends to the ledger; returns how many were written.
	std::size_t publish_pending ();
	/// Flushes, then pulls ledger spends since the last sync into the cache and
	/// returns the number of new cache entries. errc::unavailable leaves the cache as it was.
	std::size_t sync_spent_cache ();

	bool cache_contains (std::string const & token_id) const;
	std::size_t pending_spends () const;
	/// Spends this AP queued that the ledger later refused as already spent.
	std::size_t late_double_spends () const;
	std::vector<escrow_entry> open_escrows () const;

	rpc::router const & routes () const
	{
		return router;
	}

private:
	struct live_session
	{
		blindsig::signer_session run;
		bytes ownership_challenge;
		millis expires_at;
	};

	live_session take_session (std::string const & session_id);
	std::vector<std::string> validate (live_session const & session, std::vector<presented_token> const & tokens);
	blindsig::public_key issuer_key (std::string const & issuer_id, std::int64_t interval);
	blindsig::proof sign (live_session & session, blindsig::integer const & e);
	void install_routes ();

	blindsig::signer_key key;
	ledger::ledger & ledger;
	clock & time;
	gateway_options options;

	mutable std::mutex session_mutex;
	blindsig::random_source random;
	std::map<std::string, live_session> sessions;

	mutable std::mutex key_mutex;
	std::map<std::pair<std::string, std::int64_t>, blindsig::public_key> issuer_keys;

	mutable std::mutex state_mutex;
	std::unordered_set<std::string> spent_cache;
	std::vector<std::string> pending;
	std::size_t late_conflicts{ 0 };
	millis last_sync{ 0 };
	std::map<std::string, escrow_entry> escrows;
	std::map<std::string, std::string> escrow_by_token;

	rpc::router router;
	std::unique_ptr<periodic_task> publisher;
	std::unique_ptr<periodic_task> syncer;
};
}
