#pragma once

#include <digid/blindsig.hpp>

#include <condition_variable>
#include <functional>
#include <thread>

namespace digid
{
/// Signed payload of a credential: version || X || unit value || interval.
struct token_message
{
	static constexpr std::uint8_t current_version = 1;

	std::uint8_t version{ current_version };
	blindsig::integer owner;
	std::uint32_t value{ 1 };
	std::int64_t interval{ 0 };

	bool operator== (token_message const &) const = default;
};

bytes encode (token_message const & message);
/// errc::parse on truncated input, trailing bytes or an unknown version.
token_message decode_token_message (std::span<std::uint8_t const> data);

/// Runs `tick` every `period` on a background thread until destroyed or stopped.
class periodic_task
{
public:
	periodic_task (millis period, std::function<void ()> tick);
	~periodic_task ();
	periodic_task (periodic_task const &) = delete;
	periodic_task & operator= (periodic_task const &) = delete;
	void stop ();

private:
	std::mutex mutex;
	std::condition_variable wake;
	bool stopping{ false };
	std::thread worker;
};

/// Random 128-bit identifier, hex encoded.
std::string random_id (blindsig::random_source & random);
}
