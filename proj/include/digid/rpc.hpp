#pragma once

#include <digid/common.hpp>

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

// Request/response plumbing shared by every actor. Handlers are plain
// functions over JSON; the same router is reachable in-process (tests) or
// over HTTP.
namespace digid::rpc
{
using json = nlohmann::json;

struct request
{
	std::string method;
	std::string path;
	std::string body;
};

struct response
{
	int status{ 200 };
	std::string body;
	// Status line and headers as received, zero for in-process calls.
	std::size_t header_bytes{ 0 };

	std::size_t wire_size () const
	{
		return header_bytes + body.size ();
	}
	bool ok () const
	{
		return status >= 200 && status < 300;
	}
};

using path_params = std::map<std::string, std::string>;
using handler = std::function<json (json const & body, path_params const & params)>;

int status_for (errc code);

class router
{
public:
	/// Patterns use `{name}` for a whole path segment, e.g. /blocks/{cp}/{interval}.
	void add (std::string method, std::string pattern, handler fn);
	response dispatch (request const & req) const;

private:
	struct route
	{
		std::string method;
		std::vector<std::string> segments;
		handler fn;
	};
	std::vector<route> routes;
};

class endpoint
{
public:
	virtual ~endpoint () = default;
	/// Never throws for HTTP-level failures; transport problems surface as
	/// status 0 with an error body.
	virtual response send (request const & req) = 0;
};

/// Sends and decodes; non-2xx answers are rethrown as digid::error with the
/// server's code.
json call (endpoint & target, std::string method, std::string path, json const & body = json::object ());
void raise_for (response const & res);

class local_endpoint final : public endpoint
{
public:
	explicit local_endpoint (router const & target);
	response send (request const & req) override;

private:
	router const & target;
};

class http_endpoint final : public endpoint
{
public:
	explicit http_endpoint (std::string base_url, millis timeout = std::chrono::seconds{ 60 });
	response send (request const & req) override;
	std::string const & url () const
	{
		return base_url;
	}

private:
	std::string base_url;
	millis timeout;
};

struct exchange
{
	request req;
	response res;
};

/// Forwards to another endpoint and keeps a copy of every exchange.
class recording_endpoint final : public endpoint
{
public:
	explicit recording_endpoint (endpoint & inner);
	response send (request const & req) override;
	std::vector<exchange> exchanges () const;
	void clear ();

private:
	endpoint & inner;
	mutable std::mutex mutex;
	std::vector<exchange> log;
};

struct server_options
{
	std::string host{ "127.0.0.1" };
	int port{ 0 };
	std::size_t threads{ 64 };
	/// Requests processed at once; 0 means unlimited.
	std::size_t max_concurrent{ 0 };
	/// Every admitted request occupies its slot for at least this long.
	millis min_service_time{ 0 };
	/// A request still queued for a slot after this long gets a 504.
	millis gateway_timeout{ std::chrono::seconds{ 60 } };
};

class http_server
{
public:
	http_server (router const & routes, server_options options = {});
	~http_server ();
	http_server (http_server const &) = delete;
	http_server & operator= (http_server const &) = delete;

	void start ();
	void stop ();
	int port () const;
	std::string url () const;

private:
	struct impl;
	std::unique_ptr<impl> state;
};
}
