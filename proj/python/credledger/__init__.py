"""Python access to the credledger core: keys, transactions, CIDs, QR
payloads, report checking and an in-process node."""

import json

from ._credledger import (
    Error,
    audit_ledger_bytes,
    canonicalize_metadata,
    check_report,
    compute_cid,
    decode_qr,
    derive_address,
    encode_qr,
    generate_keypair,
    hash_student_id,
    merkle_root,
    sign_transaction as _sign_transaction,
    transaction_hash,
    verify_transaction,
)
from ._credledger import Node as _Node

__all__ = [
    "Error",
    "Node",
    "audit_ledger_bytes",
    "canonicalize_metadata",
    "check_report",
    "compute_cid",
    "decode_qr",
    "derive_address",
    "encode_qr",
    "generate_keypair",
    "hash_student_id",
    "merkle_root",
    "sign_transaction",
    "transaction_hash",
    "verify_transaction",
]


def sign_transaction(secret_key, payload, nonce, timestamp):
    """payload may be a dict or a JSON string; returns canonical tx JSON."""
    if not isinstance(payload, str):
        payload = json.dumps(payload)
    return _sign_transaction(secret_key, payload, nonce, timestamp)


class Node(_Node):
    def get(self, path, **params):
        status, body, _ = self.request("GET", path, list(params.items()))
        return status, json.loads(body)

    def post(self, path, body):
        if isinstance(body, (dict, list)):
            body = json.dumps(body)
        status, reply, _ = self.request("POST", path, [], body)
        return status, json.loads(reply)
