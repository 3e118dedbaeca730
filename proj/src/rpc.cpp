#include <digid/rpc.hpp>

#include <httplib.h>

#include <condition_variable>
#include <sstream>

namespace digid::rpc
{
namespace
{
	std::vector<std::string> split_path (std::string_view path)
	{
		std::vector<std::string> out;
		std::size_t start = 0;
		while (start <= path.size ())
		{
			auto end = path.find ('/', start);
			if (end == std::string_view::npos)
			{
				end = path.size ();
			}
			if (end > start)
			{
				out.emplace_back (path.substr (start, end - start));
			}
			start = end + 1;
		}
		return out;
	}

	std::string error_body (errc code, std::string const & message)
	{
		return json{ { "error", to_string (code) }, { "message", message } }.dump ();
	}
}

int status_for (errc code)
{
	switch (code)
	{
		case errc::parameter:
		case errc::parse:
		case errc::abort:
			return 400;
		case errc::denied:
			return 403;
		case errc::not_found:
			return 404;
		case errc::conflict:
		case errc::replay:
		case errc::double_spend:
		case errc::not_escrowed:
			return 409;
		case errc::validation:
		case errc::invalid_proof:
		case errc::discrepancy:
			return 422;
		case errc::transport:
			return 502;
		case errc::unavailable:
			return 503;
		case errc::timeout:
			return 504;
		case errc::internal:
			break;
	}
	return 500;
}

void router::add (std::string method, std::string pattern, handler fn)
{
	routes.push_back ({ std::move (method), split_path (pattern), std::move (fn) });
}

response router::dispatch (request const & req) const
{
	auto segments = split_path (req.path);
	for (auto const & candidate : routes)
	{
		if (candidate.method != req.method || candidate.segments.size () != segments.size ())
		{
			continue;
		}
		path_params params;
		bool matched = true;
		for (std::size_t i = 0; i < segments.size () && matched; ++i)
		{
			auto const & part = candidate.segments[i];
			if (part.size () > 2 && part.front () == '{' && part.back () == '}')
			{
				params[part.substr (1, part.size () - 2)] = segments[i];
			}
			else
			{
				matched = part == segments[i];
			}
		}
		if (!matched)
		{
			continue;
		}
		try
		{
			auto body = req.body.empty () ? json::object () : json::parse (req.body);
			auto result = candidate.fn (body, params);
			return { 200, result.dump () };
		}
		catch (error const & e)
		{
			return { status_for (e.code ()), error_body (e.code (), e.what ()) };
		}
		catch (json::exception const & e)
		{
			return { 400, error_body (errc::parse, e.what ()) };
		}
		catch (std::exception const & e)
		{
			return { 500, error_body (errc::internal, e.what ()) };
		}
	}
	return { 404, error_body (errc::not_found, "no route for " + req.method + " " + req.path) };
}

void raise_for (response const & res)
{
	if (res.ok ())
	{
		return;
	}
	errc code = res.status == 504 ? errc::timeout : res.status == 0 ? errc::transport : errc::internal;
	std::string message = "request failed with status " + std::to_string (res.status);
	auto body = json::parse (res.body, nullptr, false);
	if (body.is_object () && body.contains ("error"))
	{
		code = errc_from_string (body["error"].get<std::string> ());
		message = body.value ("message", message);
	}
	throw error (code, message);
}

json call (endpoint & target, std::string method, std::string path, json const & body)
{
	auto payload = method == "GET" ? std::string{} : body.dump ();
	request req{ std::move (method), std::move (path), std::move (payload) };
	auto res = target.send (req);
	raise_for (res);
	auto parsed = json::parse (res.body, nullptr, false);
	if (parsed.is_discarded ())
	{
		fail (errc::parse, "response body is not JSON");
	}
	return parsed;
}

local_endpoint::local_endpoint (router const & target) :
	target (target)
{
}

response local_endpoint::send (request const & req)
{
	return target.dispatch (req);
}

http_endpoint::http_endpoint (std::string base_url, millis timeout) :
	base_url (std::move (base_url)),
	timeout (timeout)
{
}

response http_endpoint::send (request const & req)
{
	httplib::Client client (base_url);
	auto seconds = static_cast<time_t> (timeout.count () / 1000);
	auto micros = static_cast<time_t> ((timeout.count () % 1000) * 1000);
	client.set_connection_timeout (seconds, micros);
	client.set_read_timeout (seconds, micros);
	client.set_write_timeout (seconds, micros);
	auto started = std::chrono::steady_clock::now ();
	auto result = req.method == "GET" ? client.Get (req.path) : client.Post (req.path, req.body, "application/json");
	if (!result)
	{
		auto elapsed = std::chrono::duration_cast<millis> (std::chrono::steady_clock::now () - started);
		auto err = result.error ();
		bool timed_out = err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout - millis{ 5 });
		auto code = timed_out ? errc::timeout : errc::transport;
		return { 0, error_body (code, httplib::to_string (err)) };
	}
	response out{ result->status, result->body };
	std::size_t header_bytes = std::string ("HTTP/1.1 ").size () + 3 + 1 + std::string (httplib::status_message (result->status)).size () + 2;
	for (auto const & [key, value] : result->headers)
	{
		header_bytes += key.size () + 2 + value.size () + 2;
	}
	out.header_bytes = header_bytes + 2;
	return out;
}

recording_endpoint::recording_endpoint (endpoint & inner) :
	inner (inner)
{
}

response recording_endpoint::send (request const & req)
{
	auto res = inner.send (req);
	std::lock_guard lock{ mutex };
	log.push_back ({ req, res });
	return res;
}

std::vector<exchange> recording_endpoint::exchanges () const
{
	std::lock_guard lock{ mutex };
	return log;
}

void recording_endpoint::clear ()
{
	std::lock_guard lock{ mutex };
	log.clear ();
}

struct http_server::impl
{
	router const & routes;
	server_options options;
	httplib::Server server;
	std::thread listener;
	int bound_port{ 0 };

	std::mutex slot_mutex;
	std::condition_variable slot_freed;
	std::size_t busy{ 0 };

	impl (router const & routes, server_options options) :
		routes (routes),
		options (std::move (options))
	{
	}

	response handle (request const & req)
	{
		if (options.max_concurrent == 0)
		{
			return serve (req);
		}
		auto deadline = std::chrono::steady_clock::now () + options.gateway_timeout;
		{
			std::unique_lock lock{ slot_mutex };
			if (!slot_freed.wait_until (lock, deadline, [this] { return busy < options.max_concurrent; }))
			{
				return { 504, error_body (errc::timeout, "gateway timeout") };
			}
			++busy;
		}
		auto res = serve (req);
		{
			std::lock_guard lock{ slot_mutex };
			--busy;
		}
		slot_freed.notify_one ();
		return res;
	}

	response serve (request const & req)
	{
		auto started = std::chrono::steady_clock::now ();
		auto res = routes.dispatch (req);
		auto spent = std::chrono::steady_clock::now () - started;
		if (spent < options.min_service_time)
		{
			std::this_thread::sleep_for (options.min_service_time - spent);
		}
		return res;
	}
};

http_server::http_server (router const & routes, server_options options) :
	state (std::make_unique<impl> (routes, std::move (options)))
{
	auto threads = state->options.threads;
	state->server.new_task_queue = [threads] { return new httplib::ThreadPool (threads); };
	auto bridge = [this] (httplib::Request const & in, httplib::Response & out) {
		auto res = state->handle ({ in.method, in.path, in.body });
		out.status = res.status;
		out.set_content (res.body, "application/json");
	};
	state->server.Get (".*", bridge);
	state->server.Post (".*", bridge);
}

http_server::~http_server ()
{
	stop ();
}

void http_server::start ()
{
	if (state->listener.joinable ())
	{
		return;
	}
	auto & opts = state->options;
	if (opts.port == 0)
	{
		state->bound_port = state->server.bind_to_any_port (opts.host);
	}
	else if (state->server.bind_to_port (opts.host, opts.port))
	{
		state->bound_port = opts.port;
	}
	else
	{
		state->bound_port = -1;
	}
	if (state->bound_port <= 0)
	{
		fail (errc::unavailable, "cannot bind " + opts.host + ":" + std::to_string (opts.port));
	}
	state->listener = std::thread ([this] { state->server.listen_after_bind (); });
	state->server.wait_until_ready ();
}

void http_server::stop ()
{
	if (state->listener.joinable ())
	{
		state->server.stop ();
		state->listener.join ();
	}
}

int http_server::port () const
{
	return state->bound_port;
}

std::string http_server::url () const
{
	return "http://" + state->options.host + ":" + std::to_string (state->bound_port);
}
}
