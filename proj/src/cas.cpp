#include <credledger/cas.hpp>
#include <credledger/error.hpp>
#include <credledger/identity.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>

namespace credledger
{
namespace
{
	[[noreturn]] void schema_violation (std::string const & message)
	{
		throw error (error_code::schema_violation, message);
	}

	std::string required_string (json const & value, char const * key)
	{
		auto existing = value.find (key);
		if (existing == value.end ())
		{
			schema_violation (std::string ("missing field \"") + key + "\"");
		}
		if (!existing->is_string ())
		{
			schema_violation (std::string ("field \"") + key + "\" must be a string");
		}
		auto text = existing->get<std::string> ();
		if (text.empty ())
		{
			schema_violation (std::string ("field \"") + key + "\" must not be empty");
		}
		return text;
	}

	bool is_digit (char c)
	{
		return c >= '0' && c <= '9';
	}

	bool valid_date (std::string_view date)
	{
		if (date.size () != 10 || date[4] != '-' || date[7] != '-')
		{
			return false;
		}
		for (auto i : { 0, 1, 2, 3, 5, 6, 8, 9 })
		{
			if (!is_digit (date[i]))
			{
				return false;
			}
		}
		auto year = std::stoi (std::string (date.substr (0, 4)));
		auto month = std::stoi (std::string (date.substr (5, 2)));
		auto day = std::stoi (std::string (date.substr (8, 2)));
		if (month < 1 || month > 12 || day < 1)
		{
			return false;
		}
		static int const days[] = { 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31 };
		auto leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
		auto limit = days[month - 1] + (month == 2 && leap ? 1 : 0);
		return day <= limit;
	}

	bool lower_hex64 (std::string_view text)
	{
		if (text.size () != 64)
		{
			return false;
		}
		for (auto c : text)
		{
			if (!is_digit (c) && !(c >= 'a' && c <= 'f'))
			{
				return false;
			}
		}
		return true;
	}
}

json metadata_document::to_json () const
{
	json result = json::object ();
	result["schema"] = metadata_schema;
	result["cert_id"] = cert_id;
	result["student_name"] = student_name;
	result["student_id_hash"] = student_id_hash;
	result["degree"] = degree;
	result["field_of_study"] = field_of_study;
	result["institution_address"] = institution_address;
	result["institution_name"] = institution_name;
	result["issue_date"] = issue_date;
	if (grade)
	{
		result["grade"] = *grade;
	}
	result["extra"] = extra;
	return result;
}

metadata_document metadata_document::from_json (json const & value)
{
	if (!value.is_object ())
	{
		schema_violation ("metadata must be an object");
	}
	static std::array<std::string_view, 11> const allowed{ "schema", "cert_id", "student_name", "student_id_hash", "degree", "field_of_study", "institution_address", "institution_name", "issue_date", "grade", "extra" };
	for (auto const & [key, ignored] : value.items ())
	{
		if (std::find_if (allowed.begin (), allowed.end (), [&key] (std::string_view k) { return key == k; }) == allowed.end ())
		{
			schema_violation ("unexpected field \"" + key + "\"");
		}
	}
	if (required_string (value, "schema") != metadata_schema)
	{
		schema_violation ("schema must be \"" + std::string (metadata_schema) + "\"");
	}
	metadata_document doc;
	doc.cert_id = required_string (value, "cert_id");
	doc.student_name = required_string (value, "student_name");
	doc.student_id_hash = required_string (value, "student_id_hash");
	doc.degree = required_string (value, "degree");
	doc.field_of_study = required_string (value, "field_of_study");
	doc.institution_address = required_string (value, "institution_address");
	doc.institution_name = required_string (value, "institution_name");
	doc.issue_date = required_string (value, "issue_date");
	if (!lower_hex64 (doc.student_id_hash))
	{
		schema_violation ("student_id_hash must be 64 lowercase hex characters");
	}
	try
	{
		address::parse (doc.institution_address);
	}
	catch (error const &)
	{
		schema_violation ("institution_address must be a 0x-prefixed address");
	}
	if (!valid_date (doc.issue_date))
	{
		schema_violation ("issue_date must be an ISO-8601 calendar date (YYYY-MM-DD)");
	}
	if (value.contains ("grade"))
	{
		doc.grade = required_string (value, "grade");
	}
	if (value.contains ("extra"))
	{
		if (!value["extra"].is_object ())
		{
			schema_violation ("extra must be an object");
		}
		doc.extra = value["extra"];
	}
	try
	{
		canonical_encode (doc.extra);
	}
	catch (error const & e)
	{
		schema_violation (std::string ("extra: ") + e.what ());
	}
	return doc;
}

std::string canonicalize_metadata (metadata_document const & doc)
{
	// Round-trip through the strict parser so hand-built documents get the same checks.
	auto checked = metadata_document::from_json (doc.to_json ());
	try
	{
		return canonical_encode (checked.to_json ());
	}
	catch (error const & e)
	{
		schema_violation (e.what ());
	}
}

metadata_document parse_metadata (std::string_view bytes)
{
	json value;
	try
	{
		value = parse_canonical (bytes);
	}
	catch (error const & e)
	{
		schema_violation (e.what ());
	}
	auto doc = metadata_document::from_json (value);
	if (!value.contains ("extra"))
	{
		schema_violation ("canonical metadata always carries \"extra\"");
	}
	return doc;
}

std::string hash_student_id (std::string_view salt, std::string_view student_id)
{
	std::string material (salt);
	material.append (student_id);
	return to_hex (sha256 (material));
}

cid compute_cid (std::span<std::uint8_t const> content)
{
	if (content.size () > max_blob_size)
	{
		throw error (error_code::too_large, "content exceeds " + std::to_string (max_blob_size) + " bytes");
	}
	return cid::of (content);
}

blob_store::blob_store (std::filesystem::path root) :
	root_m (std::move (root))
{
	std::error_code ec;
	std::filesystem::create_directories (root_m, ec);
	if (ec)
	{
		throw error (error_code::storage_failure, "cannot create blob directory " + root_m.string ());
	}
}

std::filesystem::path blob_store::path_for (cid const & id) const
{
	auto hex = to_hex (id.digest ());
	return root_m / hex.substr (0, 2) / hex.substr (2, 2) / hex;
}

cid blob_store::put (std::span<std::uint8_t const> content)
{
	auto id = compute_cid (content);
	auto target = path_for (id);
	if (std::filesystem::exists (target))
	{
		return id;
	}
	std::error_code ec;
	std::filesystem::create_directories (target.parent_path (), ec);
	if (ec)
	{
		throw error (error_code::storage_failure, "cannot create " + target.parent_path ().string ());
	}
	std::array<std::uint8_t, 8> suffix;
	random_fill (suffix);
	auto tmp = target;
	tmp += ".tmp-" + to_hex (suffix);
	{
		std::ofstream out (tmp, std::ios::binary | std::ios::trunc);
		out.write (reinterpret_cast<char const *> (content.data ()), static_cast<std::streamsize> (content.size ()));
		if (!out.flush ())
		{
			std::filesystem::remove (tmp, ec);
			throw error (error_code::storage_failure, "cannot write blob " + tmp.string ());
		}
	}
	// Concurrent puts of the same content rename identical bytes over each other.
	std::filesystem::rename (tmp, target, ec);
	if (ec)
	{
		std::filesystem::remove (tmp, ec);
		throw error (error_code::storage_failure, "cannot commit blob " + target.string ());
	}
	return id;
}

std::string blob_store::get (cid const & id) const
{
	auto source = path_for (id);
	std::ifstream in (source, std::ios::binary);
	if (!in)
	{
		throw error (error_code::not_found, "no blob for " + id.to_string ());
	}
	std::string bytes ((std::istreambuf_iterator<char> (in)), std::istreambuf_iterator<char> ());
	if (sha256 (bytes) != id.digest ())
	{
		throw error (error_code::integrity_failure, "stored bytes no longer match " + id.to_string ());
	}
	return bytes;
}

bool blob_store::contains (cid const & id) const
{
	return std::filesystem::exists (path_for (id));
}

std::size_t blob_store::size () const
{
	std::size_t count = 0;
	for (auto const & entry : std::filesystem::recursive_directory_iterator (root_m))
	{
		if (entry.is_regular_file () && entry.path ().filename ().string ().find (".tmp-") == std::string::npos)
		{
			++count;
		}
	}
	return count;
}
}
