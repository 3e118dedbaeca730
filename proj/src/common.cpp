#include <digid/common.hpp>

#include <openssl/sha.h>

#include <array>
#include <utility>

namespace digid
{
namespace
{
	constexpr std::array<std::pair<errc, std::string_view>, 16> errc_names{ {
	{ errc::parameter, "parameter" },
	{ errc::parse, "parse" },
	{ errc::validation, "validation" },
	{ errc::not_found, "not_found" },
	{ errc::conflict, "conflict" },
	{ errc::replay, "replay" },
	{ errc::abort, "abort" },
	{ errc::invalid_proof, "invalid_proof" },
	{ errc::denied, "denied" },
	{ errc::discrepancy, "discrepancy" },
	{ errc::double_spend, "double_spend" },
	{ errc::not_escrowed, "not_escrowed" },
	{ errc::unavailable, "unavailable" },
	{ errc::timeout, "timeout" },
	{ errc::transport, "transport" },
	{ errc::internal, "internal" },
	} };
}

std::string_view to_string (errc code)
{
	for (auto const & [value, name] : errc_names)
	{
		if (value == code)
		{
			return name;
		}
	}
	return "internal";
}

errc errc_from_string (std::string_view name)
{
	for (auto const & [value, text] : errc_names)
	{
		if (text == name)
		{
			return value;
		}
	}
	return errc::internal;
}

error::error (errc code, std::string const & message) :
	std::runtime_error (message),
	code_ (code)
{
}

void fail (errc code, std::string const & message)
{
	throw error (code, message);
}

std::string to_hex (std::span<std::uint8_t const> data)
{
	static constexpr char digits[] = "0123456789abcdef";
	std::string out;
	out.reserve (data.size () * 2);
	for (auto byte : data)
	{
		out.push_back (digits[byte >> 4]);
		out.push_back (digits[byte & 0x0f]);
	}
	return out;
}

namespace
{
	int nibble (char c)
	{
		if (c >= '0' && c <= '9')
			return c - '0';
		if (c >= 'a' && c <= 'f')
			return c - 'a' + 10;
		if (c >= 'A' && c <= 'F')
			return c - 'A' + 10;
		return -1;
	}
}

bytes from_hex (std::string_view hex)
{
	if (hex.size () % 2 != 0)
	{
		fail (errc::parse, "odd-length hex string");
	}
	bytes out (hex.size () / 2);
	for (std::size_t i = 0; i < out.size (); ++i)
	{
		auto hi = nibble (hex[2 * i]);
		auto lo = nibble (hex[2 * i + 1]);
		if (hi < 0 || lo < 0)
		{
			fail (errc::parse, "invalid hex digit");
		}
		out[i] = static_cast<std::uint8_t> ((hi << 4) | lo);
	}
	return out;
}

bytes to_bytes (std::string_view text)
{
	return bytes (text.begin (), text.end ());
}

digest sha256 (std::span<std::uint8_t const> data)
{
	digest out;
	SHA256 (data.data (), data.size (), out.data ());
	return out;
}

std::string sha256_hex (std::span<std::uint8_t const> data)
{
	return to_hex (sha256 (data));
}

framed_writer & framed_writer::put (std::span<std::uint8_t const> part)
{
	auto size = static_cast<std::uint32_t> (part.size ());
	for (int shift = 24; shift >= 0; shift -= 8)
	{
		buffer.push_back (static_cast<std::uint8_t> (size >> shift));
	}
	buffer.insert (buffer.end (), part.begin (), part.end ());
	return *this;
}

framed_writer & framed_writer::put (std::string_view part)
{
	return put (std::span{ reinterpret_cast<std::uint8_t const *> (part.data ()), part.size () });
}

framed_writer & framed_writer::put_u64 (std::uint64_t value)
{
	std::array<std::uint8_t, 8> raw;
	for (int i = 0; i < 8; ++i)
	{
		raw[i] = static_cast<std::uint8_t> (value >> (56 - 8 * i));
	}
	return put (raw);
}

millis system_clock::now () const
{
	return std::chrono::duration_cast<millis> (std::chrono::system_clock::now ().time_since_epoch ());
}

manual_clock::manual_clock (millis start) :
	current (start)
{
}

millis manual_clock::now () const
{
	std::lock_guard lock{ mutex };
	return current;
}

void manual_clock::advance (millis delta)
{
	std::lock_guard lock{ mutex };
	current += delta;
}

void manual_clock::set (millis value)
{
	std::lock_guard lock{ mutex };
	current = value;
}

clock & default_clock ()
{
	static system_clock instance;
	return instance;
}
}
