#include <credledger/error.hpp>
#include <credledger/verifier.hpp>

#include <map>

namespace credledger
{
std::string_view to_string (report_status status)
{
	switch (status)
	{
		case report_status::valid:
			return "Valid";
		case report_status::revoked:
			return "Revoked";
		case report_status::unknown:
			return "Unknown";
		case report_status::integrity_failure:
			return "IntegrityFailure";
	}
	return "Unknown";
}

json query_to_json (verify_query const & q)
{
	json result = json::object ();
	std::visit (
	[&result] (auto const & v) {
		using T = std::decay_t<decltype (v)>;
		if constexpr (std::is_same_v<T, query::by_id>)
		{
			result["kind"] = "id";
			result["issuer"] = v.issuer.to_string ();
			result["cert_id"] = v.cert_id;
		}
		else if constexpr (std::is_same_v<T, query::by_hash>)
		{
			result["kind"] = "metadata_hash";
			result["metadata_hash"] = to_hex (v.metadata_hash);
		}
		else if constexpr (std::is_same_v<T, query::by_cid>)
		{
			result["kind"] = "cid";
			result["cid"] = v.content.to_string ();
		}
		else
		{
			result["kind"] = "qr";
			result["qr"] = v.uri;
		}
	},
	q);
	return result;
}

json verification_report::to_json (bool with_signature) const
{
	json result = json::object ();
	result["version"] = version;
	result["query_echo"] = query_echo;
	result["status"] = to_string (status);
	if (issuer)
	{
		result["issuer"] = issuer->to_string ();
	}
	if (institution_name)
	{
		result["institution_name"] = *institution_name;
	}
	if (cert_id)
	{
		result["cert_id"] = *cert_id;
	}
	if (content)
	{
		result["cid"] = content->to_string ();
	}
	if (metadata_hash)
	{
		result["metadata_hash"] = to_hex (*metadata_hash);
	}
	if (metadata)
	{
		result["metadata"] = *metadata;
	}
	if (issued_at)
	{
		result["issued_at"] = *issued_at;
	}
	if (revoked_at)
	{
		result["revoked_at"] = *revoked_at;
	}
	if (revocation_reason)
	{
		result["revocation_reason"] = *revocation_reason;
	}
	result["ledger_height"] = ledger_height;
	result["checked_at"] = checked_at;
	result["node_public_key"] = to_hex (node_public_key);
	if (with_signature)
	{
		result["signature"] = to_hex (sig);
	}
	return result;
}

verification_report verification_report::from_json (json const & value)
{
	field::only (value, { "version", "query_echo", "status", "issuer", "institution_name", "cert_id", "cid", "metadata_hash", "metadata", "issued_at", "revoked_at", "revocation_reason", "ledger_height", "checked_at", "node_public_key", "signature" });
	verification_report result;
	result.version = field::uint (value, "version");
	if (result.version != current_version)
	{
		throw error (error_code::malformed, "unsupported report version");
	}
	result.query_echo = field::require (value, "query_echo");
	if (!result.query_echo.is_object ())
	{
		throw error (error_code::malformed, "query_echo must be an object");
	}
	static std::map<std::string, report_status, std::less<>> const statuses{
		{ "Valid", report_status::valid },
		{ "Revoked", report_status::revoked },
		{ "Unknown", report_status::unknown },
		{ "IntegrityFailure", report_status::integrity_failure }
	};
	auto status = statuses.find (field::string (value, "status"));
	if (status == statuses.end ())
	{
		throw error (error_code::malformed, "unknown report status");
	}
	result.status = status->second;
	if (value.contains ("issuer"))
	{
		result.issuer = address::parse (field::string (value, "issuer"));
	}
	if (value.contains ("institution_name"))
	{
		result.institution_name = field::string (value, "institution_name");
	}
	if (value.contains ("cert_id"))
	{
		result.cert_id = field::string (value, "cert_id");
	}
	if (value.contains ("cid"))
	{
		result.content = cid::parse (field::string (value, "cid"));
	}
	if (value.contains ("metadata_hash"))
	{
		result.metadata_hash = array_from_hex<32> (field::string (value, "metadata_hash"));
	}
	if (value.contains ("metadata"))
	{
		result.metadata = value["metadata"];
		if (!result.metadata->is_object ())
		{
			throw error (error_code::malformed, "metadata must be an object");
		}
	}
	if (value.contains ("issued_at"))
	{
		result.issued_at = field::sint (value, "issued_at");
	}
	if (value.contains ("revoked_at"))
	{
		result.revoked_at = field::sint (value, "revoked_at");
	}
	if (value.contains ("revocation_reason"))
	{
		result.revocation_reason = field::string (value, "revocation_reason");
	}
	result.ledger_height = field::uint (value, "ledger_height");
	result.checked_at = field::sint (value, "checked_at");
	result.node_public_key = array_from_hex<32> (field::string (value, "node_public_key"));
	result.sig = array_from_hex<64> (field::string (value, "signature"));
	return result;
}

namespace
{
	struct resolution
	{
		std::optional<certificate_record> record;
		bool qr_mismatch{ false };
	};

	resolution resolve (verify_query const & q, chain_state const & state)
	{
		resolution result;
		auto lookup = [&state] (address const & issuer, std::string const & cert_id) {
			return state.verify_certificate (issuer, cert_id).record;
		};
		std::visit (
		[&] (auto const & v) {
			using T = std::decay_t<decltype (v)>;
			if constexpr (std::is_same_v<T, query::by_id>)
			{
				result.record = lookup (v.issuer, v.cert_id);
			}
			else if constexpr (std::is_same_v<T, query::by_hash> || std::is_same_v<T, query::by_cid>)
			{
				hash256 digest;
				if constexpr (std::is_same_v<T, query::by_hash>)
				{
					digest = v.metadata_hash;
				}
				else
				{
					digest = v.content.digest ();
				}
				if (auto key = state.find_by_digest (digest))
				{
					result.record = lookup (key->first, key->second);
				}
			}
			else
			{
				try
				{
					auto parts = decode_qr_payload (v.uri);
					result.record = lookup (parts.issuer, parts.cert_id);
					result.qr_mismatch = result.record && result.record->content != parts.content;
				}
				catch (error const &)
				{
					// An unreadable code resolves nothing.
				}
			}
		},
		q);
		return result;
	}

	// Returns the parsed metadata if the stored bytes match everything the
	// ledger committed to for this record.
	std::optional<metadata_document> fetch_intact_metadata (certificate_record const & record, blob_store const & store)
	{
		std::string bytes;
		try
		{
			bytes = store.get (record.content);
		}
		catch (error const &)
		{
			return std::nullopt;
		}
		if (sha256 (bytes) != record.metadata_hash || cid::of (as_bytes (bytes)) != record.content)
		{
			return std::nullopt;
		}
		try
		{
			auto doc = parse_metadata (bytes);
			if (doc.cert_id != record.cert_id || doc.institution_address != record.issuer.to_string ())
			{
				return std::nullopt;
			}
			return doc;
		}
		catch (error const &)
		{
			return std::nullopt;
		}
	}

	bool valid_utf8 (std::string_view text)
	{
		try
		{
			canonical_encode (json (std::string (text)));
			return true;
		}
		catch (error const &)
		{
			return false;
		}
	}
}

verification_report verify (verify_query const & q, chain_state const & state, blob_store const & store, keypair const * signer, std::uint64_t ledger_height, std::int64_t now)
{
	if (signer == nullptr)
	{
		throw error (error_code::node_unconfigured, "no report signing key configured");
	}
	if (auto const * qr = std::get_if<query::by_qr> (&q); qr != nullptr && !valid_utf8 (qr->uri))
	{
		throw error (error_code::malformed, "QR payload is not valid UTF-8");
	}
	if (auto const * id = std::get_if<query::by_id> (&q); id != nullptr && !valid_utf8 (id->cert_id))
	{
		throw error (error_code::malformed, "cert_id is not valid UTF-8");
	}
	verification_report report;
	report.query_echo = query_to_json (q);
	report.ledger_height = ledger_height;
	report.checked_at = now;
	report.node_public_key = signer->public_bytes ();

	auto resolved = resolve (q, state);
	if (!resolved.record)
	{
		report.status = report_status::unknown;
	}
	else
	{
		auto const & record = *resolved.record;
		report.issuer = record.issuer;
		report.cert_id = record.cert_id;
		report.content = record.content;
		report.metadata_hash = record.metadata_hash;
		report.issued_at = record.issued_at;
		report.revoked_at = record.revoked_at;
		report.revocation_reason = record.revocation_reason;
		auto institution = state.institutions ().find (record.issuer);
		if (institution != state.institutions ().end ())
		{
			report.institution_name = institution->second.name;
		}
		auto doc = resolved.qr_mismatch ? std::nullopt : fetch_intact_metadata (record, store);
		if (!doc)
		{
			report.status = report_status::integrity_failure;
		}
		else
		{
			report.metadata = doc->to_json ();
			report.status = record.status == certificate_status::valid ? report_status::valid : report_status::revoked;
		}
	}
	report.sig = signer->sign (as_bytes (report.signing_bytes ()));
	return report;
}

bool check_report (verification_report const & report, std::optional<public_key> const & expected_node_key)
{
	if (expected_node_key && *expected_node_key != report.node_public_key)
	{
		return false;
	}
	try
	{
		if (!verify_signature (report.node_public_key, as_bytes (report.signing_bytes ()), report.sig))
		{
			return false;
		}
		if (report.status == report_status::valid)
		{
			if (!report.metadata || !report.content)
			{
				return false;
			}
			auto bytes = canonicalize_metadata (metadata_document::from_json (*report.metadata));
			if (cid::of (as_bytes (bytes)) != *report.content)
			{
				return false;
			}
		}
		return true;
	}
	catch (error const &)
	{
		return false;
	}
}

bool check_report (std::string_view document, std::optional<public_key> const & expected_node_key)
{
	try
	{
		return check_report (verification_report::from_json (parse_canonical (document)), expected_node_key);
	}
	catch (error const &)
	{
		return false;
	}
}

namespace
{
	bool unreserved (unsigned char c)
	{
		return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
	}

	// Cert ids carried in a QR code: 1..128 bytes of UTF-8 with no control characters.
	bool valid_qr_cert_id (std::string_view cert_id)
	{
		if (cert_id.empty () || cert_id.size () > 128)
		{
			return false;
		}
		for (auto c : cert_id)
		{
			auto u = static_cast<unsigned char> (c);
			if (u < 0x20 || u == 0x7f)
			{
				return false;
			}
		}
		return valid_utf8 (cert_id);
	}

	int upper_hex_value (char c)
	{
		if (c >= '0' && c <= '9')
		{
			return c - '0';
		}
		if (c >= 'A' && c <= 'F')
		{
			return c - 'A' + 10;
		}
		return -1;
	}

	[[noreturn]] void malformed_component (std::string const & message)
	{
		throw error (error_code::malformed_component, message);
	}

	std::string percent_decode (std::string_view text)
	{
		std::string result;
		for (std::size_t i = 0; i < text.size (); ++i)
		{
			auto c = static_cast<unsigned char> (text[i]);
			if (c == '%')
			{
				if (i + 2 >= text.size ())
				{
					malformed_component ("truncated percent escape");
				}
				auto hi = upper_hex_value (text[i + 1]);
				auto lo = upper_hex_value (text[i + 2]);
				if (hi < 0 || lo < 0)
				{
					malformed_component ("percent escapes use two uppercase hex digits");
				}
				auto decoded = static_cast<unsigned char> ((hi << 4) | lo);
				if (unreserved (decoded))
				{
					malformed_component ("unreserved character must not be percent-encoded");
				}
				result.push_back (static_cast<char> (decoded));
				i += 2;
			}
			else if (unreserved (c))
			{
				result.push_back (static_cast<char> (c));
			}
			else
			{
				malformed_component ("reserved character must be percent-encoded");
			}
		}
		return result;
	}

	constexpr std::string_view qr_prefix = "shikkha:verify?";
}

std::string percent_encode (std::string_view text)
{
	static char const digits[] = "0123456789ABCDEF";
	std::string result;
	for (auto ch : text)
	{
		auto c = static_cast<unsigned char> (ch);
		if (unreserved (c))
		{
			result.push_back (static_cast<char> (c));
		}
		else
		{
			result.push_back ('%');
			result.push_back (digits[c >> 4]);
			result.push_back (digits[c & 0x0f]);
		}
	}
	return result;
}

std::string encode_qr_payload (address const & issuer, std::string const & cert_id, cid const & content)
{
	if (!valid_qr_cert_id (cert_id))
	{
		throw error (error_code::bad_component, "cert_id must be 1-128 bytes of UTF-8 without control characters");
	}
	std::string result (qr_prefix);
	result += "v=1&i=" + issuer.to_string ();
	result += "&c=" + percent_encode (cert_id);
	result += "&d=" + content.to_string ();
	return result;
}

qr_components decode_qr_payload (std::string_view uri)
{
	auto colon = uri.find (':');
	if (colon == std::string_view::npos || uri.substr (0, colon) != "shikkha")
	{
		throw error (error_code::bad_scheme, "not a shikkha: URI");
	}
	if (!uri.starts_with (qr_prefix))
	{
		malformed_component ("expected shikkha:verify?");
	}
	std::map<std::string, std::string, std::less<>> params;
	auto rest = uri.substr (qr_prefix.size ());
	while (true)
	{
		auto amp = rest.find ('&');
		auto pair = rest.substr (0, amp);
		auto eq = pair.find ('=');
		if (eq == std::string_view::npos)
		{
			malformed_component ("query component without '='");
		}
		auto key = std::string (pair.substr (0, eq));
		if (key != "v" && key != "i" && key != "c" && key != "d")
		{
			malformed_component ("unknown key \"" + key + "\"");
		}
		if (!params.emplace (key, std::string (pair.substr (eq + 1))).second)
		{
			malformed_component ("duplicate key \"" + key + "\"");
		}
		if (amp == std::string_view::npos)
		{
			break;
		}
		rest = rest.substr (amp + 1);
	}
	auto version = params.find ("v");
	if (version == params.end ())
	{
		malformed_component ("missing version");
	}
	if (version->second != "1")
	{
		throw error (error_code::bad_version, "unsupported QR payload version " + version->second);
	}
	if (params.size () != 4)
	{
		malformed_component ("missing component");
	}
	qr_components result;
	try
	{
		result.issuer = address::parse (params["i"]);
		result.content = cid::parse (params["d"]);
	}
	catch (error const & e)
	{
		malformed_component (e.what ());
	}
	result.cert_id = percent_decode (params["c"]);
	if (!valid_qr_cert_id (result.cert_id))
	{
		malformed_component ("cert_id must be 1-128 bytes of UTF-8 without control characters");
	}
	return result;
}
}
