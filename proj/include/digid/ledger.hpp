#pragma once

#include <digid/blindsig.hpp>
#include <digid/common.hpp>

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

/// In-process stand-in for the permissioned ledger: per-interval proof
/// blocks, published signer keys and the token escrow/spend state machine.
namespace digid::ledger
{
enum class token_state
{
	fresh,
	escrowed,
	spent
};

std::string_view to_string (token_state state);
token_state token_state_from_string (std::string_view name);

/// One signing run as published: the full transcript plus the unit value
/// the issuer attached to it.
struct proof_record
{
	std::string key_fingerprint;
	blindsig::transcript transcript;
	std::uint32_t value{ 1 };

	bool operator== (proof_record const &) const = default;
};

struct proof_block
{
	std::string cp_id;
	std::int64_t interval{ 0 };
	std::string cp_key_fingerprint;
	std::vector<proof_record> proofs;
	millis sealed_at{ 0 };

	bool operator== (proof_block const &) const = default;
};

void to_json (nlohmann::json & j, proof_record const & value);
void from_json (nlohmann::json const & j, proof_record & value);
void to_json (nlohmann::json & j, proof_block const & value);
void from_json (nlohmann::json const & j, proof_block & value);

struct block_ref
{
	std::string cp_id;
	std::int64_t interval{ 0 };
	std::string digest;
	std::size_t size{ 0 };
};

struct token_state_record
{
	std::string token_id;
	token_state state{ token_state::fresh };
	std::string ap_id;
	millis recorded_at{ 0 };
};

enum class escrow_result
{
	ok,
	already_escrowed,
	already_spent
};

enum class spend_result
{
	ok,
	not_escrowed,
	already_spent
};

struct ledger_options
{
	/// Added to every write, standing in for consensus latency.
	millis commit_latency{ 0 };
	/// Newline-delimited JSON log; replayed on construction when it exists.
	std::optional<std::filesystem::path> log_path;
};

class ledger
{
public:
	explicit ledger (clock & time = default_clock (), ledger_options options = {});

	/// errc::validation for empty or mixed-key blocks, errc::conflict when
	/// (cp_id, interval) already has a block.
	block_ref append_proof_block (proof_block block);
	std::optional<proof_block> get_proof_block (std::string const & cp_id, std::int64_t interval) const;

	escrow_result record_escrow (std::string const & token_id, std::string const & ap_id);
	/// All-or-nothing over the vector: either every id moves FRESH -> ESCROWED
	/// or nothing changes and the first failure is returned.
	escrow_result record_escrow_all (std::span<std::string const> token_ids, std::string const & ap_id);
	spend_result record_spend (std::string const & token_id, std::string const & ap_id);
	spend_result record_spend_all (std::span<std::string const> token_ids, std::string const & ap_id);
	token_state query_token_state (std::string const & token_id) const;
	/// State records (escrow and spend) recorded at or after `since`.
	std::vector<token_state_record> snapshot_spent_set (millis since) const;

	void publish_key (std::string const & issuer_id, std::int64_t interval, blindsig::public_key const & key);
	std::optional<blindsig::public_key> find_key (std::string const & issuer_id, std::int64_t interval) const;

	/// Test hook: while unavailable every call throws errc::unavailable.
	void set_available (bool available);

private:
	struct token_entry
	{
		std::optional<token_state_record> escrow;
		std::optional<token_state_record> spend;
	};

	void check_available () const;
	void commit_delay () const;
	void append_log (nlohmann::json const & record);
	void replay (std::filesystem::path const & path);
	escrow_result escrow_status (std::string const & token_id) const;
	spend_result spend_status (std::string const & token_id) const;

	clock & time;
	ledger_options options;
	mutable std::shared_mutex mutex;
	std::map<std::pair<std::string, std::int64_t>, proof_block> blocks;
	std::map<std::pair<std::string, std::int64_t>, blindsig::public_key> keys;
	std::map<std::string, token_entry> tokens;
	std::vector<token_state_record> history;
	std::atomic<bool> available{ true };
	std::mutex log_mutex;
};
}
