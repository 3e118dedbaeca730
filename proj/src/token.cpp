#include <digid/token.hpp>

namespace digid
{
bytes encode (token_message const & message)
{
	bytes out{ message.version };
	auto owner = blindsig::encode (message.owner);
	auto size = static_cast<std::uint32_t> (owner.size ());
	for (int shift = 24; shift >= 0; shift -= 8)
		out.push_back (static_cast<std::uint8_t> (size >> shift));
	out.insert (out.end (), owner.begin (), owner.end ());
	for (int shift = 24; shift >= 0; shift -= 8)
		out.push_back (static_cast<std::uint8_t> (message.value >> shift));
	auto interval = static_cast<std::uint64_t> (message.interval);
	for (int shift = 56; shift >= 0; shift -= 8)
		out.push_back (static_cast<std::uint8_t> (interval >> shift));
	return out;
}

token_message decode_token_message (std::span<std::uint8_t const> data)
{
	auto read = [&] (std::size_t offset, std::size_t width) {
		if (offset + width > data.size ())
		{
			fail (errc::parse, "token message truncated");
		}
		std::uint64_t value = 0;
		for (std::size_t i = 0; i < width; ++i)
			value = (value << 8) | data[offset + i];
		return value;
	};
	token_message out;
	out.version = static_cast<std::uint8_t> (read (0, 1));
	if (out.version != token_message::current_version)
	{
		fail (errc::parse, "unsupported token message version");
	}
	auto owner_size = static_cast<std::size_t> (read (1, 4));
	if (5 + owner_size > data.size ())
	{
		fail (errc::parse, "token message truncated");
	}
	out.owner = blindsig::decode (data.subspan (5, owner_size));
	auto offset = 5 + owner_size;
	out.value = static_cast<std::uint32_t> (read (offset, 4));
	out.interval = static_cast<std::int64_t> (read (offset + 4, 8));
	if (offset + 12 != data.size ())
	{
		fail (errc::parse, "trailing bytes after token message");
	}
	return out;
}

periodic_task::periodic_task (millis period, std::function<void ()> tick)
{
	worker = std::thread ([this, period, tick = std::move (tick)] {
		std::unique_lock lock{ mutex };
		while (!stopping)
		{
			if (wake.wait_for (lock, period, [this] { return stopping; }))
			{
				break;
			}
			lock.unlock ();
			try
			{
				tick ();
			}
			catch (std::exception const &)
			{
				// The next tick retries.
			}
			lock.lock ();
		}
	});
}

periodic_task::~periodic_task ()
{
	stop ();
}

void periodic_task::stop ()
{
	{
		std::lock_guard lock{ mutex };
		stopping = true;
	}
	wake.notify_all ();
	if (worker.joinable ())
	{
		worker.join ();
	}
}

std::string random_id (blindsig::random_source & random)
{
	return to_hex (random.draw_bytes (16));
}
}
