#include <credledger/chainstate.hpp>
#include <credledger/error.hpp>

namespace credledger
{
std::string_view to_string (role r)
{
	switch (r)
	{
		case role::government:
			return "Government";
		case role::regulator:
			return "Regulator";
		case role::institution:
			return "Institution";
		case role::public_:
			return "Public";
	}
	return "Public";
}

std::string_view to_string (certificate_status status)
{
	return status == certificate_status::valid ? "Valid" : "Revoked";
}

std::string_view to_string (event_kind kind)
{
	switch (kind)
	{
		case event_kind::regulator_authorized:
			return "RegulatorAuthorized";
		case event_kind::regulator_revoked:
			return "RegulatorRevoked";
		case event_kind::institution_registered:
			return "InstitutionRegistered";
		case event_kind::institution_deactivated:
			return "InstitutionDeactivated";
		case event_kind::certificate_issued:
			return "CertificateIssued";
		case event_kind::certificate_revoked:
			return "CertificateRevoked";
		case event_kind::rejected:
			return "Rejected";
	}
	return "Rejected";
}

std::string_view to_string (reject_reason reason)
{
	switch (reason)
	{
		case reject_reason::unauthorized:
			return "Unauthorized";
		case reject_reason::role_conflict:
			return "RoleConflict";
		case reject_reason::bad_name:
			return "BadName";
		case reject_reason::not_found:
			return "NotFound";
		case reject_reason::duplicate_id:
			return "DuplicateId";
		case reject_reason::cid_mismatch:
			return "CidMismatch";
		case reject_reason::bad_id:
			return "BadId";
		case reject_reason::already_revoked:
			return "AlreadyRevoked";
		case reject_reason::bad_reason:
			return "BadReason";
	}
	return "Unauthorized";
}

bool valid_cert_id (std::string_view cert_id)
{
	if (cert_id.empty () || cert_id.size () > 128)
	{
		return false;
	}
	for (auto c : cert_id)
	{
		auto ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
		if (!ok)
		{
			return false;
		}
	}
	return true;
}

json certificate_record::to_json () const
{
	json result = json::object ();
	result["cert_id"] = cert_id;
	result["cid"] = content.to_string ();
	result["issued_at"] = issued_at;
	result["issuer"] = issuer.to_string ();
	result["metadata_hash"] = to_hex (metadata_hash);
	result["status"] = to_string (status);
	if (revoked_at)
	{
		result["revoked_at"] = *revoked_at;
	}
	if (revocation_reason)
	{
		result["revocation_reason"] = *revocation_reason;
	}
	return result;
}

certificate_record certificate_record::from_json (json const & value)
{
	field::only (value, { "cert_id", "cid", "issued_at", "issuer", "metadata_hash", "status", "revoked_at", "revocation_reason" });
	certificate_record result;
	result.cert_id = field::string (value, "cert_id");
	result.content = cid::parse (field::string (value, "cid"));
	result.issued_at = field::sint (value, "issued_at");
	result.issuer = address::parse (field::string (value, "issuer"));
	result.metadata_hash = array_from_hex<32> (field::string (value, "metadata_hash"));
	auto status = field::string (value, "status");
	if (status == "Valid")
	{
		result.status = certificate_status::valid;
	}
	else if (status == "Revoked")
	{
		result.status = certificate_status::revoked;
	}
	else
	{
		throw error (error_code::malformed, "unknown certificate status " + status);
	}
	if (value.contains ("revoked_at"))
	{
		result.revoked_at = field::sint (value, "revoked_at");
	}
	if (value.contains ("revocation_reason"))
	{
		result.revocation_reason = field::string (value, "revocation_reason");
	}
	if ((result.status == certificate_status::revoked) != result.revoked_at.has_value ())
	{
		throw error (error_code::malformed, "revoked_at must be present exactly when status is Revoked");
	}
	return result;
}

json event::to_json () const
{
	json result = json::object ();
	result["type"] = to_string (kind);
	result["tx_hash"] = to_hex (tx_hash);
	result["height"] = height;
	result["sender"] = sender.to_string ();
	if (subject)
	{
		result["subject"] = subject->to_string ();
	}
	if (cert_id)
	{
		result["cert_id"] = *cert_id;
	}
	if (content)
	{
		result["cid"] = content->to_string ();
	}
	if (reason)
	{
		result["reason"] = to_string (*reason);
	}
	return result;
}

json chain_stats::to_json () const
{
	json result = json::object ();
	result["issued_total"] = issued_total;
	result["revoked_total"] = revoked_total;
	result["institutions_active"] = institutions_active;
	result["regulators_active"] = regulators_active;
	json per = json::object ();
	for (auto const & [account, counts] : per_institution)
	{
		per[account.to_string ()] = { { "issued", counts.issued }, { "revoked", counts.revoked } };
	}
	result["per_institution"] = per;
	return result;
}

void chain_state::init_genesis (address const & government)
{
	if (government_m)
	{
		throw error (error_code::already_initialized, "genesis already initialised");
	}
	government_m = government;
}

role chain_state::role_of (address const & account) const
{
	if (government_m && account == *government_m)
	{
		return role::government;
	}
	if (active_regulator (account))
	{
		return role::regulator;
	}
	if (active_institution (account))
	{
		return role::institution;
	}
	return role::public_;
}

bool chain_state::active_regulator (address const & account) const
{
	auto existing = regulators_m.find (account);
	return existing != regulators_m.end () && existing->second.active;
}

bool chain_state::active_institution (address const & account) const
{
	auto existing = institutions_m.find (account);
	return existing != institutions_m.end () && existing->second.active;
}

std::vector<event> chain_state::apply (signed_transaction const & tx, std::uint64_t height)
{
	if (!government_m)
	{
		throw error (error_code::malformed, "state has no genesis");
	}
	event base;
	base.tx_hash = tx.hash ();
	base.height = height;
	base.sender = tx.sender;
	auto now = tx.timestamp;
	auto result = std::visit (
	[&] (auto const & p) -> event {
		using T = std::decay_t<decltype (p)>;
		if constexpr (std::is_same_v<T, payload::authorize_regulator>)
		{
			return authorize_regulator (base, p.regulator, now);
		}
		else if constexpr (std::is_same_v<T, payload::revoke_regulator>)
		{
			return revoke_regulator (base, p.regulator);
		}
		else if constexpr (std::is_same_v<T, payload::register_institution>)
		{
			return register_institution (base, p.institution, p.name, now);
		}
		else if constexpr (std::is_same_v<T, payload::deactivate_institution>)
		{
			return deactivate_institution (base, p.institution);
		}
		else if constexpr (std::is_same_v<T, payload::issue_certificate>)
		{
			return issue_certificate (base, p, now);
		}
		else
		{
			return revoke_certificate (base, p, now);
		}
	},
	tx.payload);
	return { result };
}

namespace
{
	event reject (event base, reject_reason reason)
	{
		base.kind = event_kind::rejected;
		base.reason = reason;
		return base;
	}
}

// Every address keeps the kind of role it was first given: a regulator never
// becomes an institution and vice versa, even after deactivation.

event chain_state::authorize_regulator (event base, address const & regulator, std::int64_t now)
{
	base.subject = regulator;
	if (role_of (base.sender) != role::government)
	{
		return reject (base, reject_reason::unauthorized);
	}
	if (regulator == *government_m || institutions_m.contains (regulator) || active_regulator (regulator))
	{
		return reject (base, reject_reason::role_conflict);
	}
	regulators_m[regulator] = { true, base.sender, now };
	++stats_m.regulators_active;
	base.kind = event_kind::regulator_authorized;
	return base;
}

event chain_state::revoke_regulator (event base, address const & regulator)
{
	base.subject = regulator;
	if (role_of (base.sender) != role::government)
	{
		return reject (base, reject_reason::unauthorized);
	}
	if (!active_regulator (regulator))
	{
		return reject (base, reject_reason::not_found);
	}
	regulators_m[regulator].active = false;
	--stats_m.regulators_active;
	base.kind = event_kind::regulator_revoked;
	return base;
}

event chain_state::register_institution (event base, address const & institution, std::string const & name, std::int64_t now)
{
	base.subject = institution;
	if (role_of (base.sender) != role::regulator)
	{
		return reject (base, reject_reason::unauthorized);
	}
	if (institution == *government_m || regulators_m.contains (institution) || active_institution (institution))
	{
		return reject (base, reject_reason::role_conflict);
	}
	if (name.empty () || name.size () > max_institution_name)
	{
		return reject (base, reject_reason::bad_name);
	}
	institutions_m[institution] = { name, true, base.sender, now };
	++stats_m.institutions_active;
	stats_m.per_institution[institution];
	base.kind = event_kind::institution_registered;
	return base;
}

event chain_state::deactivate_institution (event base, address const & institution)
{
	base.subject = institution;
	if (role_of (base.sender) != role::regulator)
	{
		return reject (base, reject_reason::unauthorized);
	}
	if (!active_institution (institution))
	{
		return reject (base, reject_reason::not_found);
	}
	institutions_m[institution].active = false;
	--stats_m.institutions_active;
	base.kind = event_kind::institution_deactivated;
	return base;
}

event chain_state::issue_certificate (event base, payload::issue_certificate const & p, std::int64_t now)
{
	base.cert_id = p.cert_id;
	base.content = p.content;
	if (role_of (base.sender) != role::institution)
	{
		return reject (base, reject_reason::unauthorized);
	}
	if (!valid_cert_id (p.cert_id))
	{
		return reject (base, reject_reason::bad_id);
	}
	auto key = std::make_pair (base.sender, p.cert_id);
	if (certificates_m.contains (key))
	{
		return reject (base, reject_reason::duplicate_id);
	}
	if (p.content.digest () != p.metadata_hash)
	{
		return reject (base, reject_reason::cid_mismatch);
	}
	certificate_record record;
	record.cert_id = p.cert_id;
	record.issuer = base.sender;
	record.content = p.content;
	record.metadata_hash = p.metadata_hash;
	record.issued_at = now;
	certificates_m.emplace (key, std::move (record));
	digest_index_m[p.metadata_hash].insert (key);
	++cert_id_uses_m[p.cert_id];
	++stats_m.issued_total;
	++stats_m.per_institution[base.sender].issued;
	base.kind = event_kind::certificate_issued;
	return base;
}

event chain_state::revoke_certificate (event base, payload::revoke_certificate const & p, std::int64_t now)
{
	base.cert_id = p.cert_id;
	if (role_of (base.sender) != role::institution)
	{
		return reject (base, reject_reason::unauthorized);
	}
	auto existing = certificates_m.find ({ base.sender, p.cert_id });
	if (existing == certificates_m.end ())
	{
		// Issued under this id by someone else: the sender is not its issuer.
		return reject (base, cert_id_uses_m.contains (p.cert_id) ? reject_reason::unauthorized : reject_reason::not_found);
	}
	base.content = existing->second.content;
	if (existing->second.status == certificate_status::revoked)
	{
		return reject (base, reject_reason::already_revoked);
	}
	if (p.reason.size () > max_revocation_reason)
	{
		return reject (base, reject_reason::bad_reason);
	}
	existing->second.status = certificate_status::revoked;
	existing->second.revoked_at = now;
	existing->second.revocation_reason = p.reason;
	++stats_m.revoked_total;
	++stats_m.per_institution[base.sender].revoked;
	base.kind = event_kind::certificate_revoked;
	return base;
}

verify_result chain_state::verify_certificate (address const & issuer, std::string const & cert_id) const
{
	auto existing = certificates_m.find ({ issuer, cert_id });
	if (existing == certificates_m.end ())
	{
		return {};
	}
	verify_result result;
	result.status = existing->second.status == certificate_status::valid ? verify_result::status::valid : verify_result::status::revoked;
	result.record = existing->second;
	return result;
}

std::optional<std::pair<address, std::string>> chain_state::find_by_digest (hash256 const & digest) const
{
	auto existing = digest_index_m.find (digest);
	if (existing == digest_index_m.end () || existing->second.empty ())
	{
		return std::nullopt;
	}
	return *existing->second.begin ();
}

chain_stats chain_state::stats () const
{
	return stats_m;
}

json chain_state::to_json () const
{
	json result = json::object ();
	json certificates = json::object ();
	for (auto const & [key, record] : certificates_m)
	{
		certificates[key.first.to_string ()][key.second] = record.to_json ();
	}
	result["certificates"] = certificates;
	result["government"] = government_m ? json (government_m->to_string ()) : json (nullptr);
	json institutions = json::object ();
	for (auto const & [account, entry] : institutions_m)
	{
		institutions[account.to_string ()] = {
			{ "active", entry.active },
			{ "name", entry.name },
			{ "registered_by", entry.registered_by.to_string () },
			{ "since", entry.since }
		};
	}
	result["institutions"] = institutions;
	json regulators = json::object ();
	for (auto const & [account, entry] : regulators_m)
	{
		regulators[account.to_string ()] = {
			{ "active", entry.active },
			{ "authorized_by", entry.authorized_by.to_string () },
			{ "since", entry.since }
		};
	}
	result["regulators"] = regulators;
	return result;
}

chain_state chain_state::from_json (json const & value)
{
	field::only (value, { "certificates", "government", "institutions", "regulators" });
	chain_state result;
	auto const & government = field::require (value, "government");
	if (!government.is_null ())
	{
		result.government_m = address::parse (field::string (value, "government"));
	}
	for (auto const & [account, entry] : field::require (value, "regulators").items ())
	{
		field::only (entry, { "active", "authorized_by", "since" });
		regulator_entry parsed{ field::boolean (entry, "active"), address::parse (field::string (entry, "authorized_by")), field::sint (entry, "since") };
		result.regulators_m[address::parse (account)] = parsed;
		result.stats_m.regulators_active += parsed.active ? 1 : 0;
	}
	for (auto const & [account, entry] : field::require (value, "institutions").items ())
	{
		field::only (entry, { "active", "name", "registered_by", "since" });
		institution_entry parsed{ field::string (entry, "name"), field::boolean (entry, "active"), address::parse (field::string (entry, "registered_by")), field::sint (entry, "since") };
		auto key = address::parse (account);
		result.institutions_m[key] = parsed;
		result.stats_m.institutions_active += parsed.active ? 1 : 0;
		result.stats_m.per_institution[key];
	}
	for (auto const & [issuer, by_id] : field::require (value, "certificates").items ())
	{
		auto issuer_address = address::parse (issuer);
		for (auto const & [cert_id, entry] : by_id.items ())
		{
			auto record = certificate_record::from_json (entry);
			if (record.issuer != issuer_address || record.cert_id != cert_id)
			{
				throw error (error_code::malformed, "certificate keyed under the wrong issuer or id");
			}
			auto key = std::make_pair (issuer_address, cert_id);
			result.digest_index_m[record.metadata_hash].insert (key);
			++result.cert_id_uses_m[cert_id];
			++result.stats_m.issued_total;
			++result.stats_m.per_institution[issuer_address].issued;
			if (record.status == certificate_status::revoked)
			{
				++result.stats_m.revoked_total;
				++result.stats_m.per_institution[issuer_address].revoked;
			}
			result.certificates_m.emplace (key, std::move (record));
		}
	}
	return result;
}

hash256 chain_state::state_root () const
{
	return sha256 (canonical_encode (to_json ()));
}
}
