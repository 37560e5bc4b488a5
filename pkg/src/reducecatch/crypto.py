"""Pluggable message authentication.

The default signer is a keyed deterministic MAC: the simulator acts as a
trusted dealer, so simulation fidelity needs interface correctness rather
than cryptographic strength.  An Ed25519-backed signer with the same surface
can be dropped in via config for runs that want a real asymmetric primitive.
Neither path gives a Byzantine node any way to produce a valid tag for an
honest node's key: the adversary API only ever exposes a node's own signer.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .core import NodeId


@dataclass(frozen=True)
class Signature:
    signer: NodeId
    tag: bytes


class SignerBase:
    """sign/verify over opaque digests, one keypair per node."""

    name = "base"

    def sign(self, node: NodeId, digest: bytes) -> Signature:
        raise NotImplementedError

    def verify(self, node: NodeId, digest: bytes, signature: Signature) -> bool:
        raise NotImplementedError


class TestSigner(SignerBase):
    """Deterministic HMAC tags keyed per node from the master seed."""

    name = "test"

    def __init__(self, master_seed: int, nodes: list[NodeId]):
        root = hashlib.sha256(f"signing-root:{master_seed}".encode()).digest()
        self._keys = {
            n: hashlib.sha256(root + f"node:{n}".encode()).digest() for n in nodes
        }

    def sign(self, node: NodeId, digest: bytes) -> Signature:
        key = self._keys[node]
        return Signature(node, hmac.new(key, digest, hashlib.sha256).digest())

    def verify(self, node: NodeId, digest: bytes, signature: Signature) -> bool:
        if signature.signer != node or node not in self._keys:
            return False
        expected = hmac.new(self._keys[node], digest, hashlib.sha256).digest()
        return hmac.compare_digest(expected, signature.tag)


class Ed25519Signer(SignerBase):
    """Real asymmetric signer; keys derived deterministically from the seed."""

    name = "ecdsa-like"

    def __init__(self, master_seed: int, nodes: list[NodeId]):
        from cryptography.hazmat.primitives.asymmetric import ed25519

        self._private = {}
        self._public = {}
        for n in nodes:
            seed_bytes = hashlib.sha256(f"ed25519:{master_seed}:{n}".encode()).digest()
            priv = ed25519.Ed25519PrivateKey.from_private_bytes(seed_bytes)
            self._private[n] = priv
            self._public[n] = priv.public_key()

    def sign(self, node: NodeId, digest: bytes) -> Signature:
        return Signature(node, self._private[node].sign(digest))

    def verify(self, node: NodeId, digest: bytes, signature: Signature) -> bool:
        from cryptography.exceptions import InvalidSignature

        if signature.signer != node or node not in self._public:
            return False
        try:
            self._public[node].verify(signature.tag, digest)
            return True
        except InvalidSignature:
            return False


def make_signer(kind: str, master_seed: int, nodes: list[NodeId]) -> SignerBase:
    if kind == "test":
        return TestSigner(master_seed, nodes)
    if kind in ("ecdsa-like", "ed25519"):
        return Ed25519Signer(master_seed, nodes)
    raise ValueError(f"unknown signer kind {kind!r}")


def sign(signer: SignerBase, node: NodeId, digest: bytes) -> Signature:
    return signer.sign(node, digest)


def verify(signer: SignerBase, node: NodeId, digest: bytes, signature: Signature) -> bool:
    return signer.verify(node, digest, signature)
