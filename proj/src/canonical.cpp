#include <credledger/canonical.hpp>
#include <credledger/error.hpp>

#include <algorithm>

namespace credledger
{
namespace
{
	void reject_floats (json const & value)
	{
		switch (value.type ())
		{
			case json::value_t::number_float:
				throw error (error_code::malformed, "floating point values are not representable");
			case json::value_t::object:
			case json::value_t::array:
				for (auto const & child : value)
				{
					reject_floats (child);
				}
				break;
			case json::value_t::binary:
				throw error (error_code::malformed, "binary values are not representable");
			default:
				break;
		}
	}
}

std::string canonical_encode (json const & value)
{
	reject_floats (value);
	try
	{
		return value.dump ();
	}
	catch (json::exception const & e)
	{
		throw error (error_code::malformed, e.what ());
	}
}

json parse_json (std::string_view text)
{
	try
	{
		return json::parse (text.begin (), text.end ());
	}
	catch (json::exception const & e)
	{
		throw error (error_code::malformed, e.what ());
	}
}

json parse_canonical (std::string_view text)
{
	auto value = parse_json (text);
	if (canonical_encode (value) != text)
	{
		throw error (error_code::malformed, "document is not in canonical form");
	}
	return value;
}

namespace field
{
	json const & require (json const & object, char const * key)
	{
		if (!object.is_object ())
		{
			throw error (error_code::malformed, "expected an object");
		}
		auto existing = object.find (key);
		if (existing == object.end ())
		{
			throw error (error_code::malformed, std::string ("missing field \"") + key + "\"");
		}
		return *existing;
	}

	std::string string (json const & object, char const * key)
	{
		auto const & value = require (object, key);
		if (!value.is_string ())
		{
			throw error (error_code::malformed, std::string ("field \"") + key + "\" must be a string");
		}
		return value.get<std::string> ();
	}

	std::uint64_t uint (json const & object, char const * key)
	{
		auto const & value = require (object, key);
		if (value.is_number_unsigned ())
		{
			return value.get<std::uint64_t> ();
		}
		if (value.is_number_integer () && value.get<std::int64_t> () >= 0)
		{
			return static_cast<std::uint64_t> (value.get<std::int64_t> ());
		}
		throw error (error_code::malformed, std::string ("field \"") + key + "\" must be a non-negative integer");
	}

	std::int64_t sint (json const & object, char const * key)
	{
		auto const & value = require (object, key);
		if (value.is_number_integer () && !value.is_number_unsigned ())
		{
			return value.get<std::int64_t> ();
		}
		if (value.is_number_unsigned () && value.get<std::uint64_t> () <= static_cast<std::uint64_t> (INT64_MAX))
		{
			return static_cast<std::int64_t> (value.get<std::uint64_t> ());
		}
		throw error (error_code::malformed, std::string ("field \"") + key + "\" must be an integer");
	}

	bool boolean (json const & object, char const * key)
	{
		auto const & value = require (object, key);
		if (!value.is_boolean ())
		{
			throw error (error_code::malformed, std::string ("field \"") + key + "\" must be a boolean");
		}
		return value.get<bool> ();
	}

	void only (json const & object, std::initializer_list<char const *> allowed)
	{
		if (!object.is_object ())
		{
			throw error (error_code::malformed, "expected an object");
		}
		for (auto const & [key, value] : object.items ())
		{
			auto known = std::any_of (allowed.begin (), allowed.end (), [&key] (char const * candidate) { return key == candidate; });
			if (!known)
			{
				throw error (error_code::malformed, "unexpected field \"" + key + "\"");
			}
		}
	}
}
}
