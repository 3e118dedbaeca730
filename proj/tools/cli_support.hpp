#pragma once

#include <digid/common.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace digid::cli
{
/// "1..10" or "1,2,5"; errc::parameter on anything else.
template <typename T>
std::vector<T> parse_list (std::string const & text)
{
	std::vector<T> out;
	auto dots = text.find ("..");
	try
	{
		if (dots != std::string::npos)
		{
			auto low = std::stoll (text.substr (0, dots));
			auto high = std::stoll (text.substr (dots + 2));
			for (auto v = low; v <= high; ++v)
			{
				out.push_back (static_cast<T> (v));
			}
			return out;
		}
		std::size_t start = 0;
		while (start < text.size ())
		{
			auto end = text.find (',', start);
			auto item = text.substr (start, end == std::string::npos ? std::string::npos : end - start);
			std::size_t used = 0;
			auto value = std::stod (item, &used);
			if (used != item.size ())
			{
				fail (errc::parameter, "bad list item " + item);
			}
			out.push_back (static_cast<T> (value));
			start = end == std::string::npos ? text.size () : end + 1;
		}
	}
	catch (std::logic_error const &)
	{
		fail (errc::parameter, "cannot parse list " + text);
	}
	return out;
}

inline std::vector<std::string> split (std::string const & text, char sep = ',')
{
	std::vector<std::string> out;
	std::size_t start = 0;
	while (start <= text.size ())
	{
		auto end = text.find (sep, start);
		if (end == std::string::npos)
		{
			end = text.size ();
		}
		if (end > start)
		{
			out.push_back (text.substr (start, end - start));
		}
		start = end + 1;
	}
	return out;
}

/// Writes to `path`, or stdout when it is empty or "-".
inline void emit (std::string const & path, std::string const & text)
{
	if (path.empty () || path == "-")
	{
		std::cout << text << '\n';
		return;
	}
	std::ofstream out (path);
	if (!out)
	{
		fail (errc::parameter, "cannot write " + path);
	}
	out << text << '\n';
}

template <typename Fn>
int guarded (Fn && fn)
{
	try
	{
		return fn ();
	}
	catch (error const & e)
	{
		std::cerr << "error: " << to_string (e.code ()) << ": " << e.what () << '\n';
	}
	catch (std::exception const & e)
	{
		std::cerr << "error: " << e.what () << '\n';
	}
	return 1;
}
}
