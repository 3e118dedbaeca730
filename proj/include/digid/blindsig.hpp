#pragma once

#include <digid/common.hpp>

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

/// Abe's three-move Schnorr-type blind signature over a prime-order subgroup
/// of Z*_p, plus a Schnorr proof of knowledge used for token ownership.
namespace digid::blindsig
{
using integer = mpz_class;

/// Randomness for key material and protocol sessions. A seeded source is
/// reproducible (tests, load schedules); the system source reads the OS CSPRNG.
class random_source
{
public:
	static random_source seeded (std::uint64_t seed);
	static random_source system ();

	random_source (random_source &&) noexcept;
	random_source & operator= (random_source &&) noexcept;
	~random_source ();

	/// Uniform in [0, bound).
	integer below (integer const & bound);
	/// Uniform in [1, bound).
	integer nonzero_below (integer const & bound);
	/// Integer with exactly `bits` bits (top bit set).
	integer exact_bits (unsigned bits);
	bytes draw_bytes (std::size_t count);
	/// Independent source of the same kind: a seeded source yields a seeded
	/// child drawn from its own stream, the system source another system source.
	random_source fork ();

private:
	random_source ();
	struct state;
	std::unique_ptr<state> impl;
};

struct group_params
{
	unsigned bits{ 0 };
	integer p;
	integer q;
	integer g;

	integer cofactor () const;
	/// 0 < v < p and v^q = 1 (mod p).
	bool contains (integer const & value) const;
	/// 0 <= v < q
	bool is_scalar (integer const & value) const;
	integer pow (integer const & base, integer const & exponent) const;
	integer mul (integer const & lhs, integer const & rhs) const;
	/// lhs * rhs^-1 mod p
	integer div (integer const & lhs, integer const & rhs) const;
	/// Throws errc::validation when the triple is not a valid group description.
	void validate () const;

	bool operator== (group_params const &) const = default;
};

group_params generate_group (unsigned bits, random_source & random);

enum class group_hash
{
	h1,
	h2
};

/// Big-endian magnitude, empty for zero.
bytes encode (integer const & value);
integer decode (std::span<std::uint8_t const> data);
std::string hex (integer const & value);
/// Lowercase hex without leading zeros; throws errc::parse on bad input.
integer parse_hex (std::string_view text);

/// Maps bytes into <g>: hash to Z_p, clear the cofactor, retry with a
/// counter while the image is the identity.
integer hash_to_group (group_params const & params, group_hash which, std::span<std::uint8_t const> input);
integer hash_to_scalar (group_params const & params, std::span<std::uint8_t const> input);

struct public_key
{
	group_params params;
	integer h;
	integer y;
	integer z;

	std::string fingerprint () const;
	bool operator== (public_key const &) const = default;
};

struct signer_key
{
	public_key pub;
	integer secret;
};

signer_key keygen (group_params const & params, random_source & random);
/// Builds a key from a chosen h and secret. Throws when z would be 1.
signer_key make_signer_key (group_params const & params, integer const & h, integer const & secret);

struct challenge
{
	bytes rnd;
	integer a;
	integer b1;
	integer b2;

	bool operator== (challenge const &) const = default;
};

struct proof
{
	integer r;
	integer c;
	integer s1;
	integer s2;
	integer d;

	bool operator== (proof const &) const = default;
};

/// Signer-side state for one three-move run. Single owner; answers one challenge-response.
struct signer_session
{
	bytes rnd;
	integer u;
	integer s1;
	integer s2;
	integer d;
	integer a;
	integer b1;
	integer b2;
	bool consumed{ false };

	blindsig::challenge challenge () const;
};

signer_session signer_initial_challenge (signer_key const & key, random_source & random);
/// Throws errc::replay on a consumed session and errc::parameter when e is not in Z_q.
proof signer_respond (signer_key const & key, signer_session & session, integer const & e);

/// z1 = H2(fingerprint || rnd); the per-signer salt keeps rnd values from
/// colliding across keys.
integer session_tag (public_key const & key, std::span<std::uint8_t const> rnd);

struct user_session
{
	bytes message;
	integer z1;
	integer gamma;
	integer zeta;
	integer zeta1;
	integer zeta2;
	integer t1;
	integer t2;
	integer t3;
	integer t4;
	integer t5;
	integer tau;
	integer alpha;
	integer beta1;
	integer beta2;
	integer eta;
	integer epsilon;
	integer e;
};

struct signature
{
	integer zeta;
	integer zeta1;
	integer rho;
	integer omega;
	integer sigma1;
	integer sigma2;
	integer delta;
	integer mu;

	bool operator== (signature const &) const = default;
};

/// User side of move (3). Aborts (errc::abort) when b1 or b2 is outside <g>.
std::pair<user_session, integer> user_blind (public_key const & key, bytes message, challenge const & issued, random_source & random);
/// Unblinds and runs the final congruence check; errc::invalid_proof on failure.
signature user_unblind (user_session const & session, proof const & response, public_key const & key);

/// The H3 argument for a signature: zeta || zeta1 || g^rho y^omega || g^sigma1 zeta1^delta
/// || h^sigma2 zeta2^delta || z^mu zeta^delta || m.
integer signature_hash (public_key const & key, std::span<std::uint8_t const> message, signature const & sig);
bool verify (public_key const & key, std::span<std::uint8_t const> message, signature const & sig);

bytes encode (signature const & sig);
/// Ledger key for a credential: SHA-256 of the canonical signature encoding.
std::string token_id (signature const & sig);

/// Public record of one signing run. Anyone holding the signer's public key
/// can check it, and it carries nothing that links to the unblinded signature.
struct transcript
{
	blindsig::challenge challenge;
	integer e;
	blindsig::proof proof;

	bool operator== (transcript const &) const = default;
};

bool verify_transcript (public_key const & key, transcript const & record);

struct ownership_key
{
	integer secret;
	integer pub;
};

struct ownership_proof
{
	integer commitment;
	integer response;

	bool operator== (ownership_proof const &) const = default;
};

ownership_key ownership_keygen (group_params const & params, random_source & random);
ownership_proof prove_ownership (group_params const & params, ownership_key const & key, std::span<std::uint8_t const> challenge_bytes, random_source & random);
bool verify_ownership (group_params const & params, integer const & owner, std::span<std::uint8_t const> challenge_bytes, ownership_proof const & claim);

/// Tab-separated test vector records, integers in lowercase hex.
struct test_vector
{
	public_key key;
	bytes message;
	blindsig::transcript transcript;
	blindsig::signature signature;
};

void write_test_vectors (std::ostream & out, std::span<test_vector const> vectors);
std::vector<test_vector> read_test_vectors (std::istream & in);
}
