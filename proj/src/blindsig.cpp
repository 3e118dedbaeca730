#include <digid/blindsig.hpp>

#include <openssl/rand.h>

#include <istream>
#include <ostream>
#include <sstream>

namespace digid::blindsig
{
struct random_source::state
{
	std::optional<gmp_randclass> mt;
};

random_source::random_source () :
	impl (std::make_unique<state> ())
{
}

random_source::random_source (random_source &&) noexcept = default;
random_source & random_source::operator= (random_source &&) noexcept = default;
random_source::~random_source () = default;

random_source random_source::seeded (std::uint64_t seed)
{
	random_source result;
	result.impl->mt.emplace (gmp_randinit_mt);
	result.impl->mt->seed (static_cast<unsigned long> (seed));
	return result;
}

random_source random_source::system ()
{
	return random_source{};
}

random_source random_source::fork ()
{
	if (!impl->mt)
	{
		return system ();
	}
	auto seed = mpz_class (impl->mt->get_z_bits (64));
	return seeded (static_cast<std::uint64_t> (mpz_class (seed >> 32).get_ui ()) << 32 | mpz_class (seed & 0xffffffffu).get_ui ());
}

bytes random_source::draw_bytes (std::size_t count)
{
	bytes out (count);
	if (impl->mt)
	{
		for (auto & byte : out)
		{
			byte = static_cast<std::uint8_t> (mpz_class (impl->mt->get_z_bits (8)).get_ui ());
		}
	}
	else if (count > 0 && RAND_bytes (out.data (), static_cast<int> (count)) != 1)
	{
		fail (errc::internal, "system random source failed");
	}
	return out;
}

integer random_source::below (integer const & bound)
{
	if (bound <= 0)
	{
		fail (errc::parameter, "random bound must be positive");
	}
	if (impl->mt)
	{
		return impl->mt->get_z_range (bound);
	}
	// 64 surplus bits keep the modular bias negligible.
	auto width = mpz_sizeinbase (bound.get_mpz_t (), 2) + 64;
	auto raw = draw_bytes ((width + 7) / 8);
	integer value = decode (raw);
	return value % bound;
}

integer random_source::nonzero_below (integer const & bound)
{
	if (bound <= 1)
	{
		fail (errc::parameter, "bound must exceed 1");
	}
	return below (bound - 1) + 1;
}

integer random_source::exact_bits (unsigned bits)
{
	integer top = 1;
	top <<= (bits - 1);
	return top + below (top);
}

integer group_params::cofactor () const
{
	return (p - 1) / q;
}

bool group_params::contains (integer const & value) const
{
	if (value <= 0 || value >= p)
	{
		return false;
	}
	return pow (value, q) == 1;
}

bool group_params::is_scalar (integer const & value) const
{
	return value >= 0 && value < q;
}

integer group_params::pow (integer const & base, integer const & exponent) const
{
	integer out;
	mpz_powm (out.get_mpz_t (), base.get_mpz_t (), exponent.get_mpz_t (), p.get_mpz_t ());
	return out;
}

integer group_params::mul (integer const & lhs, integer const & rhs) const
{
	integer out = lhs * rhs;
	out %= p;
	return out;
}

integer group_params::div (integer const & lhs, integer const & rhs) const
{
	integer inverse;
	if (mpz_invert (inverse.get_mpz_t (), rhs.get_mpz_t (), p.get_mpz_t ()) == 0)
	{
		fail (errc::parameter, "element is not invertible");
	}
	return mul (lhs, inverse);
}

void group_params::validate () const
{
	if (p <= 3 || q <= 2 || g <= 1 || g >= p)
	{
		fail (errc::validation, "group parameters out of range");
	}
	if (mpz_probab_prime_p (p.get_mpz_t (), 30) == 0 || mpz_probab_prime_p (q.get_mpz_t (), 30) == 0)
	{
		fail (errc::validation, "group modulus or order is not prime");
	}
	if ((p - 1) % q != 0)
	{
		fail (errc::validation, "q does not divide p-1");
	}
	if (pow (g, q) != 1)
	{
		fail (errc::validation, "g does not have order q");
	}
}

group_params generate_group (unsigned bits, random_source & random)
{
	if (bits < 16)
	{
		fail (errc::parameter, "group size below 16 bits");
	}
	group_params params;
	params.bits = bits;
	for (;;)
	{
		integer candidate = random.exact_bits (bits);
		mpz_nextprime (params.q.get_mpz_t (), candidate.get_mpz_t ());
		if (mpz_sizeinbase (params.q.get_mpz_t (), 2) != bits)
		{
			continue;
		}
		// p = k*q + 1 for the smallest even k that gives a prime.
		bool found = false;
		for (unsigned long k = 2; k < 8 * bits + 64; k += 2)
		{
			params.p = params.q * k + 1;
			if (mpz_probab_prime_p (params.p.get_mpz_t (), 30) != 0)
			{
				found = true;
				break;
			}
		}
		if (found)
		{
			break;
		}
	}
	auto k = params.cofactor ();
	do
	{
		integer base = random.below (params.p - 3) + 2;
		params.g = params.pow (base, k);
	} while (params.g == 1);
	return params;
}

bytes encode (integer const & value)
{
	if (value < 0)
	{
		fail (errc::parameter, "cannot encode negative integer");
	}
	if (value == 0)
	{
		return {};
	}
	bytes out ((mpz_sizeinbase (value.get_mpz_t (), 2) + 7) / 8);
	std::size_t written = 0;
	mpz_export (out.data (), &written, 1, 1, 1, 0, value.get_mpz_t ());
	out.resize (written);
	return out;
}

integer decode (std::span<std::uint8_t const> data)
{
	integer out;
	if (!data.empty ())
	{
		mpz_import (out.get_mpz_t (), data.size (), 1, 1, 1, 0, data.data ());
	}
	return out;
}

std::string hex (integer const & value)
{
	return value.get_str (16);
}

integer parse_hex (std::string_view text)
{
	if (text.empty () || text.size () > 4096)
	{
		fail (errc::parse, "bad hex integer length");
	}
	for (auto c : text)
	{
		bool digit = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
		if (!digit)
		{
			fail (errc::parse, "hex integers are lowercase without prefix");
		}
	}
	return integer{ std::string (text), 16 };
}

namespace
{
	// Counter-mode SHA-256 expansion to at least `bits` bits.
	integer expand (std::string_view tag, std::uint64_t counter, std::span<std::uint8_t const> input, std::size_t bits)
	{
		bytes stream;
		for (std::uint64_t block = 0; stream.size () * 8 < bits; ++block)
		{
			framed_writer frame;
			frame.put (tag).put_u64 (counter).put_u64 (block).put (input);
			auto out = sha256 (frame.data ());
			stream.insert (stream.end (), out.begin (), out.end ());
		}
		return decode (stream);
	}

	integer tagged_scalar (group_params const & params, std::string_view tag, std::span<std::uint8_t const> input)
	{
		auto width = mpz_sizeinbase (params.q.get_mpz_t (), 2) + 128;
		integer value = expand (tag, 0, input, width);
		return value % params.q;
	}
}

integer hash_to_group (group_params const & params, group_hash which, std::span<std::uint8_t const> input)
{
	std::string_view tag = which == group_hash::h1 ? "H1" : "H2";
	auto width = mpz_sizeinbase (params.p.get_mpz_t (), 2) + 128;
	auto k = params.cofactor ();
	for (std::uint64_t counter = 0;; ++counter)
	{
		integer u = expand (tag, counter, input, width) % params.p;
		if (u == 0)
		{
			continue;
		}
		auto v = params.pow (u, k);
		if (v != 1)
		{
			return v;
		}
	}
}

integer hash_to_scalar (group_params const & params, std::span<std::uint8_t const> input)
{
	return tagged_scalar (params, "H3", input);
}

std::string public_key::fingerprint () const
{
	framed_writer frame;
	frame.put (encode (params.p)).put (encode (params.q)).put (encode (params.g));
	frame.put (encode (h)).put (encode (y)).put (encode (z));
	return sha256_hex (frame.data ());
}

namespace
{
	integer key_tag (group_params const & params, integer const & h, integer const & y)
	{
		framed_writer frame;
		frame.put (encode (params.p)).put (encode (params.q)).put (encode (params.g)).put (encode (h)).put (encode (y));
		return hash_to_group (params, group_hash::h1, frame.data ());
	}
}

signer_key make_signer_key (group_params const & params, integer const & h, integer const & secret)
{
	if (!params.contains (h) || h == 1)
	{
		fail (errc::parameter, "h must be a non-identity element of <g>");
	}
	if (!params.is_scalar (secret))
	{
		fail (errc::parameter, "secret key outside Z_q");
	}
	signer_key key;
	key.pub.params = params;
	key.pub.h = h;
	key.secret = secret;
	key.pub.y = params.pow (params.g, secret);
	key.pub.z = key_tag (params, h, key.pub.y);
	if (key.pub.z == 1)
	{
		fail (errc::parameter, "key tag z is the identity");
	}
	return key;
}

signer_key keygen (group_params const & params, random_source & random)
{
	for (;;)
	{
		integer h;
		do
		{
			h = params.pow (params.g, random.nonzero_below (params.q));
		} while (h == 1);
		auto secret = random.nonzero_below (params.q);
		auto y = params.pow (params.g, secret);
		if (key_tag (params, h, y) == 1)
		{
			continue;
		}
		return make_signer_key (params, h, secret);
	}
}

challenge signer_session::challenge () const
{
	return blindsig::challenge{ rnd, a, b1, b2 };
}

integer session_tag (public_key const & key, std::span<std::uint8_t const> rnd)
{
	framed_writer frame;
	frame.put (key.fingerprint ()).put (rnd);
	return hash_to_group (key.params, group_hash::h2, frame.data ());
}

signer_session signer_initial_challenge (signer_key const & key, random_source & random)
{
	auto const & params = key.pub.params;
	signer_session session;
	session.rnd = random.draw_bytes (32);
	auto z1 = session_tag (key.pub, session.rnd);
	auto z2 = params.div (key.pub.z, z1);
	session.u = random.below (params.q);
	session.s1 = random.below (params.q);
	session.s2 = random.below (params.q);
	session.d = random.below (params.q);
	session.a = params.pow (params.g, session.u);
	session.b1 = params.mul (params.pow (params.g, session.s1), params.pow (z1, session.d));
	session.b2 = params.mul (params.pow (key.pub.h, session.s2), params.pow (z2, session.d));
	return session;
}

proof signer_respond (signer_key const & key, signer_session & session, integer const & e)
{
	auto const & q = key.pub.params.q;
	if (session.consumed)
	{
		fail (errc::replay, "signer session already answered");
	}
	if (!key.pub.params.is_scalar (e))
	{
		fail (errc::parameter, "challenge-response e outside Z_q");
	}
	session.consumed = true;
	proof out;
	out.c = e - session.d;
	mpz_mod (out.c.get_mpz_t (), out.c.get_mpz_t (), q.get_mpz_t ());
	out.r = session.u - out.c * key.secret;
	mpz_mod (out.r.get_mpz_t (), out.r.get_mpz_t (), q.get_mpz_t ());
	out.s1 = session.s1;
	out.s2 = session.s2;
	out.d = session.d;
	return out;
}

namespace
{
	integer mod (integer value, integer const & modulus)
	{
		mpz_mod (value.get_mpz_t (), value.get_mpz_t (), modulus.get_mpz_t ());
		return value;
	}

	integer h3 (public_key const & key, integer const & zeta, integer const & zeta1, integer const & alpha, integer const & beta1, integer const & beta2, integer const & eta, std::span<std::uint8_t const> message)
	{
		framed_writer frame;
		frame.put (encode (zeta)).put (encode (zeta1)).put (encode (alpha)).put (encode (beta1)).put (encode (beta2)).put (encode (eta)).put (message);
		return hash_to_scalar (key.params, frame.data ());
	}
}

std::pair<user_session, integer> user_blind (public_key const & key, bytes message, challenge const & issued, random_source & random)
{
	auto const & params = key.params;
	if (!params.contains (issued.a) || !params.contains (issued.b1) || !params.contains (issued.b2))
	{
		fail (errc::abort, "signer commitment outside <g>");
	}
	user_session s;
	s.message = std::move (message);
	s.z1 = session_tag (key, issued.rnd);
	s.gamma = random.nonzero_below (params.q);
	s.zeta = params.pow (key.z, s.gamma);
	s.zeta1 = params.pow (s.z1, s.gamma);
	s.zeta2 = params.div (s.zeta, s.zeta1);
	s.t1 = random.below (params.q);
	s.t2 = random.below (params.q);
	s.t3 = random.below (params.q);
	s.t4 = random.below (params.q);
	s.t5 = random.below (params.q);
	s.alpha = params.mul (issued.a, params.mul (params.pow (params.g, s.t1), params.pow (key.y, s.t2)));
	s.beta1 = params.mul (params.pow (issued.b1, s.gamma), params.mul (params.pow (params.g, s.t3), params.pow (s.zeta1, s.t4)));
	// h carries t5 here; with t2 the sigma2 check below cannot balance.
	s.beta2 = params.mul (params.pow (issued.b2, s.gamma), params.mul (params.pow (key.h, s.t5), params.pow (s.zeta2, s.t4)));
	s.tau = random.below (params.q);
	s.eta = params.pow (key.z, s.tau);
	s.epsilon = h3 (key, s.zeta, s.zeta1, s.alpha, s.beta1, s.beta2, s.eta, s.message);
	s.e = mod (s.epsilon - s.t2 - s.t4, params.q);
	auto e = s.e;
	return { std::move (s), e };
}

signature user_unblind (user_session const & session, proof const & response, public_key const & key)
{
	auto const & params = key.params;
	auto const & q = params.q;
	for (auto const * value : { &response.r, &response.c, &response.s1, &response.s2, &response.d })
	{
		if (!params.is_scalar (*value))
		{
			fail (errc::invalid_proof, "proof scalar outside Z_q");
		}
	}
	signature sig;
	sig.zeta = session.zeta;
	sig.zeta1 = session.zeta1;
	sig.rho = mod (response.r + session.t1, q);
	sig.omega = mod (response.c + session.t2, q);
	sig.sigma1 = mod (session.gamma * response.s1 + session.t3, q);
	sig.sigma2 = mod (session.gamma * response.s2 + session.t5, q);
	sig.delta = mod (response.d + session.t4, q);
	sig.mu = mod (session.tau - sig.delta * session.gamma, q);
	if (mod (sig.omega + sig.delta, q) != signature_hash (key, session.message, sig))
	{
		fail (errc::invalid_proof, "signer proof fails the final check");
	}
	return sig;
}

integer signature_hash (public_key const & key, std::span<std::uint8_t const> message, signature const & sig)
{
	auto const & params = key.params;
	auto zeta2 = params.div (sig.zeta, sig.zeta1);
	auto lhs_a = params.mul (params.pow (params.g, sig.rho), params.pow (key.y, sig.omega));
	auto lhs_b1 = params.mul (params.pow (params.g, sig.sigma1), params.pow (sig.zeta1, sig.delta));
	auto lhs_b2 = params.mul (params.pow (key.h, sig.sigma2), params.pow (zeta2, sig.delta));
	auto lhs_eta = params.mul (params.pow (key.z, sig.mu), params.pow (sig.zeta, sig.delta));
	return h3 (key, sig.zeta, sig.zeta1, lhs_a, lhs_b1, lhs_b2, lhs_eta, message);
}

bool verify (public_key const & key, std::span<std::uint8_t const> message, signature const & sig)
{
	auto const & params = key.params;
	if (sig.zeta == 1 || !params.contains (sig.zeta) || !params.contains (sig.zeta1))
	{
		return false;
	}
	for (auto const * value : { &sig.rho, &sig.omega, &sig.sigma1, &sig.sigma2, &sig.delta, &sig.mu })
	{
		if (!params.is_scalar (*value))
		{
			return false;
		}
	}
	return mod (sig.omega + sig.delta, params.q) == signature_hash (key, message, sig);
}

bytes encode (signature const & sig)
{
	framed_writer frame;
	for (auto const * value : { &sig.zeta, &sig.zeta1, &sig.rho, &sig.omega, &sig.sigma1, &sig.sigma2, &sig.delta, &sig.mu })
	{
		frame.put (encode (*value));
	}
	return frame.data ();
}

std::string token_id (signature const & sig)
{
	return sha256_hex (encode (sig));
}

bool verify_transcript (public_key const & key, transcript const & record)
{
	auto const & params = key.params;
	auto const & ch = record.challenge;
	auto const & pr = record.proof;
	for (auto const * value : { &record.e, &pr.r, &pr.c, &pr.s1, &pr.s2, &pr.d })
	{
		if (!params.is_scalar (*value))
		{
			return false;
		}
	}
	if (!params.contains (ch.a) || !params.contains (ch.b1) || !params.contains (ch.b2))
	{
		return false;
	}
	if (mod (pr.c + pr.d, params.q) != record.e)
	{
		return false;
	}
	auto z1 = session_tag (key, ch.rnd);
	auto z2 = params.div (key.z, z1);
	return params.mul (params.pow (params.g, pr.r), params.pow (key.y, pr.c)) == ch.a
	&& params.mul (params.pow (params.g, pr.s1), params.pow (z1, pr.d)) == ch.b1
	&& params.mul (params.pow (key.h, pr.s2), params.pow (z2, pr.d)) == ch.b2;
}

ownership_key ownership_keygen (group_params const & params, random_source & random)
{
	ownership_key key;
	key.secret = random.nonzero_below (params.q);
	key.pub = params.pow (params.g, key.secret);
	return key;
}

namespace
{
	integer ownership_challenge (group_params const & params, integer const & owner, integer const & commitment, std::span<std::uint8_t const> challenge_bytes)
	{
		framed_writer frame;
		frame.put (encode (params.g)).put (encode (owner)).put (encode (commitment)).put (challenge_bytes);
		return tagged_scalar (params, "OWN", frame.data ());
	}
}

ownership_proof prove_ownership (group_params const & params, ownership_key const & key, std::span<std::uint8_t const> challenge_bytes, random_source & random)
{
	auto nonce = random.nonzero_below (params.q);
	ownership_proof out;
	out.commitment = params.pow (params.g, nonce);
	auto c = ownership_challenge (params, key.pub, out.commitment, challenge_bytes);
	out.response = mod (nonce + c * key.secret, params.q);
	return out;
}

bool verify_ownership (group_params const & params, integer const & owner, std::span<std::uint8_t const> challenge_bytes, ownership_proof const & claim)
{
	if (!params.contains (owner) || owner == 1 || !params.contains (claim.commitment) || !params.is_scalar (claim.response))
	{
		return false;
	}
	auto c = ownership_challenge (params, owner, claim.commitment, challenge_bytes);
	return params.pow (params.g, claim.response) == params.mul (claim.commitment, params.pow (owner, c));
}

namespace
{
	constexpr char const * vector_header = "#p\tq\tg\th\ty\tz\tm\trnd\ta\tb1\tb2\te\tr\tc\ts1\ts2\td\tzeta\tzeta1\trho\tomega\tsigma1\tsigma2\tdelta\tmu";
}

void write_test_vectors (std::ostream & out, std::span<test_vector const> vectors)
{
	out << vector_header << '\n';
	for (auto const & v : vectors)
	{
		auto const & k = v.key;
		auto const & t = v.transcript;
		auto const & s = v.signature;
		out << hex (k.params.p) << '\t' << hex (k.params.q) << '\t' << hex (k.params.g) << '\t'
			<< hex (k.h) << '\t' << hex (k.y) << '\t' << hex (k.z) << '\t'
			<< digid::to_hex (v.message) << '\t' << digid::to_hex (t.challenge.rnd) << '\t'
			<< hex (t.challenge.a) << '\t' << hex (t.challenge.b1) << '\t' << hex (t.challenge.b2) << '\t'
			<< hex (t.e) << '\t' << hex (t.proof.r) << '\t' << hex (t.proof.c) << '\t'
			<< hex (t.proof.s1) << '\t' << hex (t.proof.s2) << '\t' << hex (t.proof.d) << '\t'
			<< hex (s.zeta) << '\t' << hex (s.zeta1) << '\t' << hex (s.rho) << '\t' << hex (s.omega) << '\t'
			<< hex (s.sigma1) << '\t' << hex (s.sigma2) << '\t' << hex (s.delta) << '\t' << hex (s.mu) << '\n';
	}
}

std::vector<test_vector> read_test_vectors (std::istream & in)
{
	std::vector<test_vector> out;
	std::string line;
	std::size_t line_number = 0;
	while (std::getline (in, line))
	{
		++line_number;
		if (line.empty () || line.front () == '#')
		{
			continue;
		}
		std::vector<std::string> fields;
		std::stringstream stream (line);
		std::string field;
		while (std::getline (stream, field, '\t'))
		{
			fields.push_back (field);
		}
		if (fields.size () != 25)
		{
			fail (errc::parse, "test vector line " + std::to_string (line_number) + ": expected 25 fields");
		}
		auto hex_or_empty = [] (std::string const & text) {
			return text.empty () ? bytes{} : digid::from_hex (text);
		};
		test_vector v;
		v.key.params.p = parse_hex (fields[0]);
		v.key.params.q = parse_hex (fields[1]);
		v.key.params.g = parse_hex (fields[2]);
		v.key.params.bits = static_cast<unsigned> (mpz_sizeinbase (v.key.params.q.get_mpz_t (), 2));
		v.key.h = parse_hex (fields[3]);
		v.key.y = parse_hex (fields[4]);
		v.key.z = parse_hex (fields[5]);
		v.message = hex_or_empty (fields[6]);
		v.transcript.challenge.rnd = hex_or_empty (fields[7]);
		v.transcript.challenge.a = parse_hex (fields[8]);
		v.transcript.challenge.b1 = parse_hex (fields[9]);
		v.transcript.challenge.b2 = parse_hex (fields[10]);
		v.transcript.e = parse_hex (fields[11]);
		v.transcript.proof = { parse_hex (fields[12]), parse_hex (fields[13]), parse_hex (fields[14]), parse_hex (fields[15]), parse_hex (fields[16]) };
		v.signature = { parse_hex (fields[17]), parse_hex (fields[18]), parse_hex (fields[19]), parse_hex (fields[20]),
			parse_hex (fields[21]), parse_hex (fields[22]), parse_hex (fields[23]), parse_hex (fields[24]) };
		out.push_back (std::move (v));
	}
	return out;
}
}
