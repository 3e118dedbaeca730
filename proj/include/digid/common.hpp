#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace digid
{
using bytes = std::vector<std::uint8_t>;

enum class errc
{
	parameter,
	parse,
	validation,
	not_found,
	conflict,
	replay,
	abort,
	invalid_proof,
	denied,
	discrepancy,
	double_spend,
	not_escrowed,
	unavailable,
	timeout,
	transport,
	internal,
};

std::string_view to_string (errc code);
errc errc_from_string (std::string_view name);

// Single exception type for protocol and parameter failures. The code
// survives a round trip over the wire so callers can branch on it.
class error : public std::runtime_error
{
public:
	error (errc code, std::string const & message);
	errc code () const noexcept
	{
		return code_;
	}

private:
	errc code_;
};

[[noreturn]] void fail (errc code, std::string const & message);

std::string to_hex (std::span<std::uint8_t const> data);
bytes from_hex (std::string_view hex);
bytes to_bytes (std::string_view text);

using digest = std::array<std::uint8_t, 32>;
digest sha256 (std::span<std::uint8_t const> data);
std::string sha256_hex (std::span<std::uint8_t const> data);

// Length-prefixed concatenation: every part is written as a 4-byte
// big-endian length followed by its bytes.
class framed_writer
{
public:
	framed_writer & put (std::span<std::uint8_t const> part);
	framed_writer & put (std::string_view part);
	framed_writer & put_u64 (std::uint64_t value);
	bytes const & data () const
	{
		return buffer;
	}

private:
	bytes buffer;
};

using millis = std::chrono::milliseconds;

class clock
{
public:
	virtual ~clock () = default;
	// Milliseconds since the Unix epoch.
	virtual millis now () const = 0;
};

class system_clock final : public clock
{
public:
	millis now () const override;
};

// Test clock advanced by hand.
class manual_clock final : public clock
{
public:
	explicit manual_clock (millis start = millis{ 1'700'000'000'000 });
	millis now () const override;
	void advance (millis delta);
	void set (millis value);

private:
	mutable std::mutex mutex;
	millis current;
};

clock & default_clock ();
}
