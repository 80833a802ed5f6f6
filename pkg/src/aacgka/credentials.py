"""Attribute credentials with selective disclosure.

Two interchangeable instantiations sit behind one interface:

* ``bbs-style``: a multi-message signature over the pairing groups with a
  Fiat-Shamir proof of knowledge of the signature and of every undisclosed
  message. Presentations are rerandomized, so two showings of the same
  credential share no bytes; the transcript hash absorbs the caller's
  header, binding the proof to it.

* ``sd-hash``: salted hash commitments, one per attribute, signed as a
  vector. Disclosure opens individual commitments. The issuer signature and
  the unopened commitments appear verbatim in every presentation, so
  showings of one credential are trivially linkable, and the header is
  bound only by a keyless hash. It exists as the negative control the
  unlinkability experiments are calibrated against.

Credentials carry a fixed number of message slots. Attributes occupy slots
in sorted key order and the rest are filled with padding derived from the
signature blinding, so a presentation does not reveal how many attributes
a credential holds, only which slots it opens.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import pairing as pr
from .primitives import Rng, gen_sig_keypair, hash_bytes, sign, verify
from .wire import decode, encode, pack

DEFAULT_MAX_ATTRS = 8

SCHEMES = ("bbs-style", "sd-hash")


class CredentialError(Exception):
    """Raised on malformed credential material or misuse of the interface."""


AttributeMap = dict[str, str]


@dataclass(frozen=True)
class IssuerPk:
    issuer_id: str
    scheme: str
    max_attrs: int
    data: bytes

    def to_value(self):
        return {"id": self.issuer_id, "scheme": self.scheme, "slots": self.max_attrs, "data": self.data}


@dataclass(frozen=True)
class IssuerSk:
    issuer_id: str
    scheme: str
    max_attrs: int
    data: bytes


@dataclass(frozen=True)
class Credential:
    attrs: AttributeMap
    issuer_id: str
    sigma: dict

    def to_value(self):
        return {"attrs": self.attrs, "issuer": self.issuer_id, "sigma": self.sigma}


@dataclass(frozen=True)
class Presentation:
    header: bytes
    disc_attrs: AttributeMap
    issuer_id: str
    pi: dict

    def to_value(self):
        return {"header": self.header, "disc": self.disc_attrs, "issuer": self.issuer_id, "pi": self.pi}

    def encoded(self) -> bytes:
        return encode(self.to_value())

    @classmethod
    def from_value(cls, value) -> "Presentation":
        try:
            return cls(
                header=value["header"],
                disc_attrs=dict(value["disc"]),
                issuer_id=value["issuer"],
                pi=dict(value["pi"]),
            )
        except (TypeError, KeyError) as exc:
            raise CredentialError("malformed presentation") from exc


def _check_attrs(attrs: AttributeMap, max_attrs: int) -> None:
    if not all(isinstance(k, str) and isinstance(v, str) for k, v in attrs.items()):
        raise CredentialError("attributes must be text key/value pairs")
    if len(attrs) > max_attrs:
        raise CredentialError(f"more than {max_attrs} attributes")


def attr_slots(attrs: AttributeMap) -> dict[str, int]:
    """Slot index for each attribute key: rank in sorted key order."""
    return {key: i for i, key in enumerate(sorted(attrs))}


# ---- bbs-style instantiation ----

_generators: list = []
_g2_cache: dict[bytes, object] = {}


def _gens(count: int) -> list:
    """Fixed-base tables for the blinding generator and message generators.

    Index 0 blinds the signature; index i+1 carries message slot i. Shared
    across issuers, as the generators are nothing-up-my-sleeve points.
    """
    while len(_generators) < count:
        i = len(_generators)
        label = b"blind" if i == 0 else b"msg-%d" % (i - 1)
        _generators.append(pr.fixed_g1(pr.hash_to_g1(label)))
    return _generators[:count]


def _issuer_point(ipk: IssuerPk):
    if ipk.data not in _g2_cache:
        _g2_cache[ipk.data] = pr.g2_from_bytes(ipk.data)
    return _g2_cache[ipk.data]


def _msg_scalar(key: str, value: str) -> int:
    return pr.hash_to_scalar(pack("attr", key, value))


def _pad_scalar(s: int, slot: int) -> int:
    return pr.hash_to_scalar(pack("pad", s, slot))


def _messages(attrs: AttributeMap, s: int, max_attrs: int) -> list[int]:
    slots = attr_slots(attrs)
    msgs = [_pad_scalar(s, i) for i in range(max_attrs)]
    for key, value in attrs.items():
        msgs[slots[key]] = _msg_scalar(key, value)
    return msgs


def _commit_b(msgs: list[int], s: int):
    """g1 + blind^s + sum(gen_i^m_i); the signed commitment."""
    gens = _gens(len(msgs) + 1)
    acc = pr.g1_add(pr.G1_GEN, gens[0].mul(s))
    for i, m in enumerate(msgs):
        acc = pr.g1_add(acc, gens[i + 1].mul(m))
    return acc


def _bbs_keygen(issuer_id: str, rng: Rng, max_attrs: int):
    x = rng.scalar(int(pr.R), nonzero=True)
    w = pr.g2_mul(x, pr.G2_GEN)
    ipk = IssuerPk(issuer_id, "bbs-style", max_attrs, pr.g2_to_bytes(w))
    isk = IssuerSk(issuer_id, "bbs-style", max_attrs, encode(x))
    return ipk, isk


def _bbs_issue(isk: IssuerSk, attrs: AttributeMap, rng: Rng) -> Credential:
    x = decode(isk.data)
    order = int(pr.R)
    while True:
        e = rng.scalar(order, nonzero=True)
        if (x + e) % order:
            break
    s = rng.scalar(order, nonzero=True)
    msgs = _messages(attrs, s, isk.max_attrs)
    b_pt = _commit_b(msgs, s)
    a_pt = pr.g1_mul(pow(x + e, -1, order), b_pt)
    sigma = {"a": pr.g1_to_bytes(a_pt), "e": e, "s": s}
    return Credential(attrs=dict(attrs), issuer_id=isk.issuer_id, sigma=sigma)


def _bbs_verify_cred(ipk: IssuerPk, cred: Credential) -> bool:
    try:
        a_pt = pr.g1_from_bytes(cred.sigma["a"])
        e, s = int(cred.sigma["e"]), int(cred.sigma["s"])
        msgs = _messages(cred.attrs, s, ipk.max_attrs)
    except (pr.CurveError, KeyError, TypeError, CredentialError):
        return False
    b_pt = _commit_b(msgs, s)
    w = _issuer_point(ipk)
    # e(A, w * g2^e) == e(B, g2)
    return pr.pairing_check(
        [(a_pt, pr.g2_add(w, pr.g2_mul(e, pr.G2_GEN))), (pr.g1_neg(b_pt), pr.G2_GEN)]
    )


def _bbs_challenge(ipk, a_prime, a_bar, d_pt, t1, t2, disclosed, header: bytes) -> int:
    material = pack(
        "bbs-pok",
        ipk.data,
        pr.g1_to_bytes(a_prime),
        pr.g1_to_bytes(a_bar),
        pr.g1_to_bytes(d_pt),
        pr.g1_to_bytes(t1) if t1 is not None else b"",
        pr.g1_to_bytes(t2) if t2 is not None else b"",
        [[i, m] for i, m in disclosed],
        header,
    )
    return pr.hash_to_scalar(material)


def _bbs_prove(ipk: IssuerPk, cred: Credential, disc_attrs: AttributeMap, header: bytes, rng: Rng) -> Presentation:
    order = int(pr.R)
    a_pt = pr.g1_from_bytes(cred.sigma["a"], subgroup_check=False)
    e, s = int(cred.sigma["e"]), int(cred.sigma["s"])
    msgs = _messages(cred.attrs, s, ipk.max_attrs)
    slots = attr_slots(cred.attrs)
    disc_slots = sorted(slots[key] for key in disc_attrs)
    hidden = [i for i in range(ipk.max_attrs) if i not in disc_slots]
    gens = _gens(ipk.max_attrs + 1)

    r1 = rng.scalar(order, nonzero=True)
    r2 = rng.scalar(order)
    r3 = pow(r1, -1, order)
    b_pt = _commit_b(msgs, s)
    t_b = pr.g1_mul(r1, b_pt)
    a_prime = pr.g1_mul(r1, a_pt)
    a_bar = pr.g1_add(pr.g1_mul(order - e, a_prime), t_b)
    d_pt = pr.g1_add(t_b, pr.g1_neg(gens[0].mul(r2)))
    s_prime = (s - r2 * r3) % order

    # relation 1: a_bar - d = (-e) a_prime + r2 blind
    # relation 2: g1 + sum_disc m_i gen_i = r3 d + (-s') blind + sum_hidden (-m_j) gen_j
    rho_e, rho_r2, rho_r3, rho_s = (rng.scalar(order) for _ in range(4))
    rho_m = {j: rng.scalar(order) for j in hidden}
    t1 = pr.g1_add(pr.g1_mul(rho_e, a_prime), gens[0].mul(rho_r2))
    t2 = pr.g1_add(pr.g1_mul(rho_r3, d_pt), gens[0].mul(rho_s))
    for j in hidden:
        t2 = pr.g1_add(t2, gens[j + 1].mul(rho_m[j]))

    disclosed = [(i, msgs[i]) for i in disc_slots]
    c = _bbs_challenge(ipk, a_prime, a_bar, d_pt, t1, t2, disclosed, header)

    z_e = (rho_e - c * e) % order
    z_r2 = (rho_r2 + c * r2) % order
    z_r3 = (rho_r3 + c * r3) % order
    z_s = (rho_s - c * s_prime) % order
    z_m = {j: (rho_m[j] - c * msgs[j]) % order for j in hidden}

    pi = {
        "ap": pr.g1_to_bytes(a_prime),
        "ab": pr.g1_to_bytes(a_bar),
        "d": pr.g1_to_bytes(d_pt),
        "c": c,
        "ze": z_e,
        "zr2": z_r2,
        "zr3": z_r3,
        "zs": z_s,
        "zm": {j: z for j, z in z_m.items()},
        "idx": list(disc_slots),
    }
    return Presentation(header=header, disc_attrs=dict(disc_attrs), issuer_id=ipk.issuer_id, pi=pi)


def _bbs_verify_proof(ipk: IssuerPk, pres: Presentation, header: bytes) -> bool:
    order = int(pr.R)
    pi = pres.pi
    try:
        a_prime = pr.g1_from_bytes(pi["ap"], subgroup_check=False)
        a_bar = pr.g1_from_bytes(pi["ab"], subgroup_check=False)
        d_pt = pr.g1_from_bytes(pi["d"], subgroup_check=False)
        c = int(pi["c"])
        z_e, z_r2, z_r3, z_s = (int(pi[k]) for k in ("ze", "zr2", "zr3", "zs"))
        idx = [int(i) for i in pi["idx"]]
        z_m = {int(j): int(z) for j, z in pi["zm"].items()}
    except (pr.CurveError, KeyError, TypeError, ValueError):
        return False

    if len(idx) != len(pres.disc_attrs) or sorted(idx) != idx:
        return False
    if any(i < 0 or i >= ipk.max_attrs for i in idx):
        return False
    hidden = [i for i in range(ipk.max_attrs) if i not in idx]
    if sorted(z_m) != hidden:
        return False
    if not pr.g1_batch_subgroup_check([a_prime, a_bar, d_pt]):
        return False

    gens = _gens(ipk.max_attrs + 1)
    disclosed = [
        (slot, _msg_scalar(key, pres.disc_attrs[key]))
        for slot, key in zip(idx, sorted(pres.disc_attrs))
    ]

    # reconstruct commitments from the responses and the challenge
    t1 = pr.g1_add(
        pr.g1_add(pr.g1_mul(z_e, a_prime), gens[0].mul(z_r2)),
        pr.g1_mul((-c) % order, pr.g1_add(a_bar, pr.g1_neg(d_pt))),
    )
    lhs = pr.G1_GEN
    for slot, m in disclosed:
        lhs = pr.g1_add(lhs, gens[slot + 1].mul(m))
    t2 = pr.g1_add(pr.g1_mul(z_r3, d_pt), gens[0].mul(z_s))
    for j in hidden:
        t2 = pr.g1_add(t2, gens[j + 1].mul(z_m[j]))
    t2 = pr.g1_add(t2, pr.g1_mul((-c) % order, lhs))
    if t1 is None or t2 is None:
        return False

    if _bbs_challenge(ipk, a_prime, a_bar, d_pt, t1, t2, disclosed, header) != c:
        return False

    w = _issuer_point(ipk)
    # e(a_prime, w) == e(a_bar, g2) proves a_bar = a_prime^x
    return pr.pairing_check([(a_prime, w), (pr.g1_neg(a_bar), pr.G2_GEN)])


# ---- sd-hash instantiation ----

def _sd_commit(salt: bytes, key: str, value: str) -> bytes:
    return hash_bytes(pack("sd", salt, key, value))


def _sd_keygen(issuer_id: str, rng: Rng, max_attrs: int):
    kp = gen_sig_keypair(rng)
    ipk = IssuerPk(issuer_id, "sd-hash", max_attrs, kp.spk)
    isk = IssuerSk(issuer_id, "sd-hash", max_attrs, kp.ssk)
    return ipk, isk


def _sd_vector(attrs: AttributeMap, salts: list[bytes], max_attrs: int) -> list[bytes]:
    slots = attr_slots(attrs)
    commits = [_sd_commit(salts[i], "", "") for i in range(max_attrs)]
    for key, value in attrs.items():
        commits[slots[key]] = _sd_commit(salts[slots[key]], key, value)
    return commits


def _sd_issue(isk: IssuerSk, attrs: AttributeMap, rng: Rng) -> Credential:
    salts = [rng.bytes(16) for _ in range(isk.max_attrs)]
    commits = _sd_vector(attrs, salts, isk.max_attrs)
    sig = sign(isk.data, pack("sd-cred", isk.issuer_id, commits))
    return Credential(attrs=dict(attrs), issuer_id=isk.issuer_id, sigma={"salts": salts, "sig": sig})


def _sd_verify_cred(ipk: IssuerPk, cred: Credential) -> bool:
    try:
        salts = list(cred.sigma["salts"])
        commits = _sd_vector(cred.attrs, salts, ipk.max_attrs)
        return verify(ipk.data, pack("sd-cred", ipk.issuer_id, commits), cred.sigma["sig"])
    except (KeyError, TypeError, IndexError, CredentialError):
        return False


def _sd_prove(ipk: IssuerPk, cred: Credential, disc_attrs: AttributeMap, header: bytes, rng: Rng) -> Presentation:
    salts = list(cred.sigma["salts"])
    commits = _sd_vector(cred.attrs, salts, ipk.max_attrs)
    slots = attr_slots(cred.attrs)
    opens = {slots[key]: salts[slots[key]] for key in disc_attrs}
    sig = cred.sigma["sig"]
    pi = {
        "commits": commits,
        "opens": {i: opens[i] for i in sorted(opens)},
        "sig": sig,
        "bind": hash_bytes(pack("sd-bind", header, sig)),
    }
    return Presentation(header=header, disc_attrs=dict(disc_attrs), issuer_id=ipk.issuer_id, pi=pi)


def _sd_verify_proof(ipk: IssuerPk, pres: Presentation, header: bytes) -> bool:
    pi = pres.pi
    try:
        commits = list(pi["commits"])
        opens = {int(i): s for i, s in pi["opens"].items()}
        sig = pi["sig"]
        if pi["bind"] != hash_bytes(pack("sd-bind", header, sig)):
            return False
    except (KeyError, TypeError, ValueError):
        return False
    if len(commits) != ipk.max_attrs or len(opens) != len(pres.disc_attrs):
        return False
    for slot, key in zip(sorted(opens), sorted(pres.disc_attrs)):
        if not 0 <= slot < ipk.max_attrs:
            return False
        if commits[slot] != _sd_commit(opens[slot], key, pres.disc_attrs[key]):
            return False
    return verify(ipk.data, pack("sd-cred", ipk.issuer_id, commits), sig)


# ---- shared interface ----

_IMPLS = {
    "bbs-style": (_bbs_keygen, _bbs_issue, _bbs_verify_cred, _bbs_prove, _bbs_verify_proof),
    "sd-hash": (_sd_keygen, _sd_issue, _sd_verify_cred, _sd_prove, _sd_verify_proof),
}


def _impl(scheme: str):
    if scheme not in _IMPLS:
        raise CredentialError(f"unknown scheme {scheme!r}")
    return _IMPLS[scheme]


def abc_keygen(scheme: str, issuer_id: str, rng: Rng, max_attrs: int = DEFAULT_MAX_ATTRS):
    if max_attrs < 1:
        raise CredentialError("at least one attribute slot is required")
    return _impl(scheme)[0](issuer_id, rng, max_attrs)


def abc_issue(isk: IssuerSk, attrs: AttributeMap, rng: Rng) -> Credential:
    _check_attrs(attrs, isk.max_attrs)
    return _impl(isk.scheme)[1](isk, attrs, rng)


def abc_verify_cred(ipk: IssuerPk, cred: Credential) -> bool:
    if cred.issuer_id != ipk.issuer_id or len(cred.attrs) > ipk.max_attrs:
        return False
    return _impl(ipk.scheme)[2](ipk, cred)


def abc_prove(ipk: IssuerPk, cred: Credential, disc_attrs: AttributeMap, header: bytes, rng: Rng) -> Presentation:
    for key, value in disc_attrs.items():
        if cred.attrs.get(key) != value:
            raise CredentialError("disclosed attribute not in credential")
    if cred.issuer_id != ipk.issuer_id:
        raise CredentialError("credential issuer does not match key")
    return _impl(ipk.scheme)[3](ipk, cred, disc_attrs, header, rng)


def abc_verify_proof(ipk: IssuerPk, pres: Presentation, header: bytes) -> bool:
    if pres.issuer_id != ipk.issuer_id:
        return False
    try:
        return _impl(ipk.scheme)[4](ipk, pres, header)
    except CredentialError:
        return False


# ---- issuer directory ----

@dataclass
class PkiDirectory:
    """Registered issuers; the trusted root the protocol resolves keys from."""

    scheme: str
    issuers: dict[str, tuple[IssuerPk, IssuerSk]]

    def issuer_pk(self, issuer_id: str) -> IssuerPk:
        if issuer_id not in self.issuers:
            raise CredentialError(f"unknown issuer {issuer_id!r}")
        return self.issuers[issuer_id][0]


def pki_init(issuer_ids, rng: Rng, scheme: str = "bbs-style", max_attrs: int = DEFAULT_MAX_ATTRS) -> PkiDirectory:
    issuers = {}
    for issuer_id in issuer_ids:
        if issuer_id in issuers:
            raise CredentialError(f"duplicate issuer {issuer_id!r}")
        issuers[issuer_id] = abc_keygen(scheme, issuer_id, rng, max_attrs)
    return PkiDirectory(scheme=scheme, issuers=issuers)


def pki_issue(pki: PkiDirectory, issuer_id: str, attrs: AttributeMap, rng: Rng):
    """Issue a credential; returns the issuer public key and the credential."""
    if issuer_id not in pki.issuers:
        raise CredentialError(f"unknown issuer {issuer_id!r}")
    ipk, isk = pki.issuers[issuer_id]
    return ipk, abc_issue(isk, attrs, rng)


def pki_issuer_pk(pki: PkiDirectory, pres: Presentation) -> IssuerPk:
    """Resolve the issuer key a presentation claims to come from."""
    return pki.issuer_pk(pres.issuer_id)
