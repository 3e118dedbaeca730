#pragma once

#include <digid/blindsig.hpp>
#include <digid/rpc.hpp>
#include <digid/token.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>

/// The user's client: buys credentials, audits anonymity sets and runs the
/// entry/exit journeys against CP, AP and Service endpoints.
namespace digid::wallet
{
enum class token_status
{
	requested,
	issued,
	verified,
	escrowed,
	spent
};

std::string_view to_string (token_status value);
token_status token_status_from_string (std::string_view name);

struct wallet_token
{
	std::string id;
	std::string issuer_id;
	std::int64_t interval{ 0 };
	std::uint32_t value{ 1 };
	blindsig::ownership_key ownership;
	bytes message;
	std::optional<blindsig::signature> credential;
	std::string key_fingerprint;
	/// This token's own signing run, looked up in the published block.
	blindsig::transcript issuance;
	token_status state{ token_status::requested };
	std::optional<std::size_t> anonymity_set;
	std::string discrepancy;
};

struct journey_ticket
{
	std::string id;
	blindsig::signature ap_signature;
	bytes y;
	std::string ap_key_fingerprint;
	std::vector<std::string> tokens;
	std::string entry_station;
	millis entry_time{ 0 };
};

void to_json (nlohmann::json & j, wallet_token const & value);
void from_json (nlohmann::json const & j, wallet_token & value);
void to_json (nlohmann::json & j, journey_ticket const & value);
void from_json (nlohmann::json const & j, journey_ticket & value);

struct wallet_options
{
	/// Newline-delimited JSON store; loaded on construction when present.
	std::optional<std::filesystem::path> store;
	std::string user_ref{ "wallet" };
	/// Audit anonymity sets after a successful entry.
	bool verify_after_entry{ true };
	/// When non-empty, AP keys outside this fingerprint set are refused.
	std::set<std::string> trusted_ap_keys;
	/// Keep user-side blinding sessions in memory (tests inspect them).
	bool retain_blinding{ false };
};

class wallet
{
public:
	wallet (blindsig::random_source random, clock & time = default_clock (), wallet_options options = {});

	/// `interval` defaults to the CP's current one. errc::parameter for count 0;
	/// errc::invalid_proof when any proof fails to unblind, in which case nothing is stored.
	std::vector<std::string> acquire_tokens (rpc::endpoint & cp, std::size_t count, std::optional<std::int64_t> interval = std::nullopt);
	/// Size of the token's anonymity set; errc::discrepancy when the block
	/// lacks the token's own proof or carries anything not under the token's key.
	std::size_t verify_anonymity_set (std::string const & token_id, rpc::endpoint & ap);
	/// errc::parameter, before any request, unless every token is ISSUED or VERIFIED.
	journey_ticket enter (rpc::endpoint & service, rpc::endpoint & ap, std::vector<std::string> const & token_ids, std::string const & station);
	/// Returns the ids of the rebate tokens. errc::double_spend when the AP or
	/// ledger already has the tokens spent.
	std::vector<std::string> exit (rpc::endpoint & service, rpc::endpoint & ap, std::string const & ticket_id, std::string const & station);
	/// AP half of an exit: ownership proofs, finalise, blind signature over z.
	blindsig::signature prove_and_finalise (rpc::endpoint & ap, std::vector<std::string> const & token_ids, bytes const & z);

	std::vector<wallet_token> tokens () const;
	std::optional<wallet_token> token (std::string const & id) const;
	std::vector<journey_ticket> tickets () const;
	std::optional<journey_ticket> ticket (std::string const & id) const;
	/// Copies in a token or ticket held elsewhere (shared-device scenarios).
	void import_token (wallet_token token);
	void import_ticket (journey_ticket ticket);
	void add_key (blindsig::public_key key);

	std::vector<blindsig::user_session> blinding_log () const;
	/// Rewrites the store with one record per live object.
	void compact ();

private:
	blindsig::public_key fetch_key (rpc::endpoint & target, std::string const & path, std::string const & expected);
	blindsig::public_key key_by_fingerprint (std::string const & fingerprint) const;
	blindsig::signature ap_sign (rpc::endpoint & ap, std::string const & path, std::vector<std::string> const & token_ids, bytes const & message);
	void advance (std::string const & id, token_status state);
	void remember (blindsig::user_session const & session);
	void append (nlohmann::json const & record);
	void load ();

	clock & time;
	wallet_options options;
	mutable std::mutex mutex;
	blindsig::random_source random;
	std::map<std::string, wallet_token> held;
	std::map<std::string, journey_ticket> live_tickets;
	std::map<std::string, blindsig::public_key> keys;
	std::vector<blindsig::user_session> blinding;
};
}
