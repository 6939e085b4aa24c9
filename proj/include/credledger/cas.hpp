#pragma once

#include <credledger/canonical.hpp>
#include <credledger/cid.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace credledger
{
constexpr std::size_t max_blob_size = 1024 * 1024;
constexpr std::string_view metadata_schema = "shikkhachain/cert/v1";

/// Off-ledger certificate metadata. `extra` is always serialized, possibly empty.
struct metadata_document
{
	std::string cert_id;
	std::string student_name;
	/// 64 lowercase hex chars: SHA-256 of the salted student id.
	std::string student_id_hash;
	std::string degree;
	std::string field_of_study;
	std::string institution_address;
	std::string institution_name;
	/// YYYY-MM-DD
	std::string issue_date;
	std::optional<std::string> grade;
	json extra = json::object ();

	json to_json () const;
	/// Strict schema check; throws error_code::schema_violation.
	static metadata_document from_json (json const & value);

	bool operator== (metadata_document const &) const = default;
};

/// Canonical bytes of a metadata document; their SHA-256 is the metadata hash.
std::string canonicalize_metadata (metadata_document const & doc);

/// Parses stored metadata bytes; they must already be canonical.
metadata_document parse_metadata (std::string_view bytes);

/// SHA-256 of salt || student id, hex encoded.
std::string hash_student_id (std::string_view salt, std::string_view student_id);

/// Throws too_large above max_blob_size.
cid compute_cid (std::span<std::uint8_t const> content);

/**
 * Directory of immutable blobs named by the hex digest of their content,
 * sharded two levels deep: <root>/ab/cd/abcd....
 * Reads re-hash the bytes, so on-disk corruption surfaces as
 * error_code::integrity_failure rather than bad data.
 */
class blob_store
{
public:
	explicit blob_store (std::filesystem::path root);

	cid put (std::span<std::uint8_t const> content);
	cid put (std::string_view content)
	{
		return put (as_bytes (content));
	}
	/// Throws not_found or integrity_failure.
	std::string get (cid const & id) const;
	bool contains (cid const & id) const;
	std::size_t size () const;

	std::filesystem::path path_for (cid const & id) const;

private:
	std::filesystem::path root_m;
};
}
