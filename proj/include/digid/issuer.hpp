#pragma once

#include <digid/blindsig.hpp>
#include <digid/ledger.hpp>
#include <digid/rpc.hpp>
#include <digid/token.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <set>

/// Certification Provider: sells blind signatures on user tokens under a
/// per-interval key and publishes each interval's transcripts as a proof block.
namespace digid::issuer
{
/// Stand-in for the identified purchase. The default approves everything.
class payment_client
{
public:
	virtual ~payment_client () = default;
	virtual bool authorize (std::string const & user_ref, std::size_t count) = 0;
};

class approve_all final : public payment_client
{
public:
	bool authorize (std::string const &, std::size_t) override
	{
		return true;
	}
};

struct interval_key
{
	std::int64_t interval{ 0 };
	blindsig::signer_key key;
};

struct issuance_challenge
{
	std::string session_id;
	std::int64_t interval{ 0 };
	std::string key_fingerprint;
	std::vector<blindsig::challenge> challenges;
};

struct issuer_options
{
	std::string cp_id{ "cp" };
	millis interval_length{ std::chrono::seconds{ 60 } };
	/// Publishes finished intervals and prepares the current key on this period; 0 disables the timer.
	millis publish_period{ 0 };
};

class issuer
{
public:
	issuer (blindsig::group_params params, ledger::ledger & ledger, clock & time, blindsig::random_source random, issuer_options options = {}, std::shared_ptr<payment_client> payments = nullptr);
	~issuer ();

	std::string const & id () const
	{
		return options.cp_id;
	}
	std::int64_t current_interval () const;

	/// Fresh key for `interval`, published to the ledger's key directory.
	/// errc::conflict when the interval already has a key or a published block.
	interval_key rotate_interval_key (std::int64_t interval);
	std::optional<blindsig::public_key> key_for (std::int64_t interval) const;
	/// Key for `interval`, rotating one in when the interval has none yet.
	blindsig::public_key ensure_key (std::int64_t interval);

	/// errc::not_found for an interval without a key, errc::parameter for count 0,
	/// errc::denied when the payment client declines.
	/// `value` is the unit value recorded against each proof in the block.
	issuance_challenge begin_issuance (std::string const & user_ref, std::size_t count, std::int64_t interval, std::uint32_t value = 1);
	/// errc::not_found for an unknown session, errc::replay for a completed one,
	/// errc::parameter on a count mismatch or an e outside Z_q. Nothing is
	/// queued unless every token gets a proof.
	std::vector<blindsig::proof> complete_issuance (std::string const & session_id, std::vector<blindsig::integer> const & es);

	/// errc::not_found when nothing is queued; errc::conflict from the ledger on a repeat.
	ledger::block_ref publish_interval_block (std::int64_t interval);
	std::size_t queued (std::int64_t interval) const;
	/// Timer body: ensures a key for the current interval and publishes every earlier queue.
	void tick ();

	rpc::router const & routes () const
	{
		return router;
	}

private:
	struct session
	{
		std::int64_t interval;
		std::uint32_t value;
		std::vector<blindsig::signer_session> runs;
	};

	void install_routes ();
	interval_key const & key_locked (std::int64_t interval) const;

	blindsig::group_params params;
	ledger::ledger & ledger;
	clock & time;
	issuer_options options;
	std::shared_ptr<payment_client> payments;

	mutable std::mutex mutex;
	blindsig::random_source random;
	std::map<std::int64_t, interval_key> keys;
	std::set<std::int64_t> published;
	std::map<std::string, session> sessions;
	std::set<std::string> completed;
	std::map<std::int64_t, std::vector<ledger::proof_record>> queue;

	rpc::router router;
	std::unique_ptr<periodic_task> timer;
};
}
