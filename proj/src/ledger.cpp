#include <digid/ledger.hpp>
#include <digid/wire.hpp>

#include <fstream>
#include <mutex>
#include <thread>

namespace digid::ledger
{
using nlohmann::json;

std::string_view to_string (token_state state)
{
	switch (state)
	{
		case token_state::fresh:
			return "FRESH";
		case token_state::escrowed:
			return "ESCROWED";
		case token_state::spent:
			return "SPENT";
	}
	return "FRESH";
}

token_state token_state_from_string (std::string_view name)
{
	if (name == "ESCROWED")
		return token_state::escrowed;
	if (name == "SPENT")
		return token_state::spent;
	if (name == "FRESH")
		return token_state::fresh;
	fail (errc::parse, "unknown token state " + std::string (name));
}

void to_json (json & j, proof_record const & value)
{
	j = json{ { "key", value.key_fingerprint }, { "transcript", value.transcript }, { "value", value.value } };
}

void from_json (json const & j, proof_record & value)
{
	value.key_fingerprint = j.at ("key").get<std::string> ();
	value.transcript = j.at ("transcript").get<blindsig::transcript> ();
	value.value = j.at ("value").get<std::uint32_t> ();
}

void to_json (json & j, proof_block const & value)
{
	j = json{ { "cp_id", value.cp_id }, { "interval", value.interval }, { "cp_key", value.cp_key_fingerprint },
		{ "proofs", value.proofs }, { "sealed_at", value.sealed_at.count () } };
}

void from_json (json const & j, proof_block & value)
{
	value.cp_id = j.at ("cp_id").get<std::string> ();
	value.interval = j.at ("interval").get<std::int64_t> ();
	value.cp_key_fingerprint = j.at ("cp_key").get<std::string> ();
	value.proofs = j.at ("proofs").get<std::vector<proof_record>> ();
	value.sealed_at = millis{ j.at ("sealed_at").get<std::int64_t> () };
}

namespace
{
	json state_json (token_state_record const & record)
	{
		return json{ { "kind", "state" }, { "token_id", record.token_id }, { "state", to_string (record.state) },
			{ "ap_id", record.ap_id }, { "recorded_at", record.recorded_at.count () } };
	}
}

ledger::ledger (clock & time, ledger_options options) :
	time (time),
	options (std::move (options))
{
	if (this->options.log_path && std::filesystem::exists (*this->options.log_path))
	{
		replay (*this->options.log_path);
	}
}

void ledger::check_available () const
{
	if (!available.load ())
	{
		fail (errc::unavailable, "ledger unavailable");
	}
}

void ledger::commit_delay () const
{
	if (options.commit_latency.count () > 0)
	{
		std::this_thread::sleep_for (options.commit_latency);
	}
}

void ledger::append_log (json const & record)
{
	if (!options.log_path)
	{
		return;
	}
	std::lock_guard lock{ log_mutex };
	std::ofstream out (*options.log_path, std::ios::app);
	out << record.dump () << '\n';
	if (!out)
	{
		fail (errc::unavailable, "cannot append to ledger log");
	}
}

void ledger::replay (std::filesystem::path const & path)
{
	std::ifstream in (path);
	std::string line;
	std::size_t line_number = 0;
	while (std::getline (in, line))
	{
		++line_number;
		if (line.empty ())
		{
			continue;
		}
		auto record = json::parse (line, nullptr, false);
		if (record.is_discarded () || !record.contains ("kind"))
		{
			fail (errc::parse, "ledger log line " + std::to_string (line_number) + " is not a record");
		}
		auto kind = record["kind"].get<std::string> ();
		if (kind == "block")
		{
			auto block = record.at ("block").get<proof_block> ();
			blocks.emplace (std::pair{ block.cp_id, block.interval }, std::move (block));
		}
		else if (kind == "state")
		{
			token_state_record entry{ record.at ("token_id").get<std::string> (), token_state_from_string (record.at ("state").get<std::string> ()),
				record.at ("ap_id").get<std::string> (), millis{ record.at ("recorded_at").get<std::int64_t> () } };
			auto & slot = tokens[entry.token_id];
			(entry.state == token_state::escrowed ? slot.escrow : slot.spend) = entry;
			history.push_back (entry);
		}
		else if (kind == "key")
		{
			keys[{ record.at ("issuer").get<std::string> (), record.at ("interval").get<std::int64_t> () }] = record.at ("key").get<blindsig::public_key> ();
		}
		else
		{
			fail (errc::parse, "ledger log line " + std::to_string (line_number) + ": unknown kind " + kind);
		}
	}
}

block_ref ledger::append_proof_block (proof_block block)
{
	check_available ();
	if (block.proofs.empty ())
	{
		fail (errc::validation, "proof block must hold at least one proof");
	}
	for (auto const & record : block.proofs)
	{
		if (record.key_fingerprint != block.cp_key_fingerprint)
		{
			fail (errc::validation, "proof block mixes signer keys");
		}
	}
	commit_delay ();
	json encoded = block;
	block_ref ref{ block.cp_id, block.interval, sha256_hex (to_bytes (encoded.dump ())), block.proofs.size () };
	std::unique_lock lock{ mutex };
	auto key = std::pair{ block.cp_id, block.interval };
	if (blocks.contains (key))
	{
		fail (errc::conflict, "block already published for " + block.cp_id + "/" + std::to_string (block.interval));
	}
	append_log (json{ { "kind", "block" }, { "block", encoded } });
	blocks.emplace (key, std::move (block));
	return ref;
}

std::optional<proof_block> ledger::get_proof_block (std::string const & cp_id, std::int64_t interval) const
{
	check_available ();
	std::shared_lock lock{ mutex };
	auto found = blocks.find ({ cp_id, interval });
	if (found == blocks.end ())
	{
		return std::nullopt;
	}
	return found->second;
}

escrow_result ledger::escrow_status (std::string const & token_id) const
{
	auto found = tokens.find (token_id);
	if (found == tokens.end ())
	{
		return escrow_result::ok;
	}
	if (found->second.spend)
	{
		return escrow_result::already_spent;
	}
	return found->second.escrow ? escrow_result::already_escrowed : escrow_result::ok;
}

spend_result ledger::spend_status (std::string const & token_id) const
{
	auto found = tokens.find (token_id);
	if (found == tokens.end () || !found->second.escrow)
	{
		return spend_result::not_escrowed;
	}
	return found->second.spend ? spend_result::already_spent : spend_result::ok;
}

escrow_result ledger::record_escrow (std::string const & token_id, std::string const & ap_id)
{
	return record_escrow_all (std::span{ &token_id, 1 }, ap_id);
}

escrow_result ledger::record_escrow_all (std::span<std::string const> token_ids, std::string const & ap_id)
{
	check_available ();
	commit_delay ();
	std::unique_lock lock{ mutex };
	for (std::size_t i = 0; i < token_ids.size (); ++i)
	{
		auto status = escrow_status (token_ids[i]);
		if (status != escrow_result::ok)
		{
			return status;
		}
		for (std::size_t j = 0; j < i; ++j)
		{
			if (token_ids[j] == token_ids[i])
			{
				return escrow_result::already_escrowed;
			}
		}
	}
	auto now = time.now ();
	for (auto const & id : token_ids)
	{
		token_state_record record{ id, token_state::escrowed, ap_id, now };
		append_log (state_json (record));
		tokens[id].escrow = record;
		history.push_back (std::move (record));
	}
	return escrow_result::ok;
}

spend_result ledger::record_spend (std::string const & token_id, std::string const & ap_id)
{
	return record_spend_all (std::span{ &token_id, 1 }, ap_id);
}

spend_result ledger::record_spend_all (std::span<std::string const> token_ids, std::string const & ap_id)
{
	check_available ();
	commit_delay ();
	std::unique_lock lock{ mutex };
	for (std::size_t i = 0; i < token_ids.size (); ++i)
	{
		auto status = spend_status (token_ids[i]);
		if (status != spend_result::ok)
		{
			return status;
		}
		for (std::size_t j = 0; j < i; ++j)
		{
			if (token_ids[j] == token_ids[i])
			{
				return spend_result::already_spent;
			}
		}
	}
	auto now = time.now ();
	for (auto const & id : token_ids)
	{
		token_state_record record{ id, token_state::spent, ap_id, now };
		append_log (state_json (record));
		tokens[id].spend = record;
		history.push_back (std::move (record));
	}
	return spend_result::ok;
}

token_state ledger::query_token_state (std::string const & token_id) const
{
	check_available ();
	std::shared_lock lock{ mutex };
	auto found = tokens.find (token_id);
	if (found == tokens.end ())
	{
		return token_state::fresh;
	}
	if (found->second.spend)
	{
		return token_state::spent;
	}
	return found->second.escrow ? token_state::escrowed : token_state::fresh;
}

std::vector<token_state_record> ledger::snapshot_spent_set (millis since) const
{
	check_available ();
	std::shared_lock lock{ mutex };
	std::vector<token_state_record> out;
	for (auto const & record : history)
	{
		if (record.recorded_at >= since)
		{
			out.push_back (record);
		}
	}
	return out;
}

void ledger::publish_key (std::string const & issuer_id, std::int64_t interval, blindsig::public_key const & key)
{
	check_available ();
	std::unique_lock lock{ mutex };
	auto slot = std::pair{ issuer_id, interval };
	auto found = keys.find (slot);
	if (found != keys.end ())
	{
		if (found->second == key)
		{
			return;
		}
		fail (errc::conflict, "a different key is already published for " + issuer_id + "/" + std::to_string (interval));
	}
	append_log (json{ { "kind", "key" }, { "issuer", issuer_id }, { "interval", interval }, { "key", key } });
	keys.emplace (slot, key);
}

std::optional<blindsig::public_key> ledger::find_key (std::string const & issuer_id, std::int64_t interval) const
{
	check_available ();
	std::shared_lock lock{ mutex };
	auto found = keys.find ({ issuer_id, interval });
	if (found == keys.end ())
	{
		return std::nullopt;
	}
	return found->second;
}

void ledger::set_available (bool value)
{
	available.store (value);
}
}
