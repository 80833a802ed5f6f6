"""Attribute gated group membership over the key agreement core.

Joining a group, by invitation or externally, requires presenting a
credential that satisfies one of the group's requirements. A presentation
is bound to the group's current challenge value and to a fresh signature
key, so it cannot be replayed into another group or epoch, and the fresh
key links the presenter to exactly one roster entry. Every commit is
signed by its committer and folded into the challenge,

    chal' = H(chal || sig),

starting from the empty string at group creation, which gives all members
an agreed hash chain over the commit history. Requirements change through
signed proposals carried by commits, and each commit snapshots the
post-commit requirement set so welcomed members can pick it up.

Processing is total: anything invalid leaves the caller's state untouched
and reports failure.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .cgka import (
    KP_ADD,
    KP_JOIN,
    CgkaCommit,
    CgkaState,
    GroupError,
    KeyPackage,
    Proposal,
    Welcome,
    cgka_commit,
    cgka_context,
    cgka_create,
    cgka_genkp,
    cgka_init,
    cgka_process_commit,
    cgka_process_welcome,
    cgka_propose,
    stage_join,
)
from .credentials import (
    Credential,
    CredentialError,
    PkiDirectory,
    Presentation,
    abc_prove,
    abc_verify_proof,
    pki_issue,
)
from .primitives import Rng, gen_sig_keypair, hash_bytes, sign, verify
from .wire import WireError, decode, pack


class ProtocolError(Exception):
    """Raised when a caller asks for an operation its state cannot perform."""


@dataclass(frozen=True)
class Requirement:
    """One acceptable credential shape: issuer plus required attribute
    values. An empty attrs map asks only for possession of a credential
    from the issuer."""

    req_id: str
    issuer_id: str
    attrs: dict

    def to_value(self):
        return {"id": self.req_id, "iss": self.issuer_id, "attrs": dict(self.attrs)}

    @classmethod
    def from_value(cls, value):
        return cls(req_id=value["id"], issuer_id=value["iss"], attrs=dict(value["attrs"]))


def reqs_value(reqs: dict) -> dict:
    return {rid: req.to_value() for rid, req in reqs.items()}


def reqs_from_value(value: dict) -> dict:
    return {rid: Requirement.from_value(v) for rid, v in value.items()}


def reqs_met(cred: Credential, reqs: dict):
    """First requirement the credential satisfies, in req_id order.

    Returns (ok, claims, req_id) where claims names the attributes to
    disclose. Satisfaction means same issuer and every required attribute
    present with the required value. No requirements means no way in.
    """
    for rid in sorted(reqs):
        req = reqs[rid]
        if req.issuer_id != cred.issuer_id:
            continue
        if all(cred.attrs.get(k) == v for k, v in req.attrs.items()):
            return True, sorted(req.attrs), rid
    return False, [], None


def update_reqs(reqs: dict, action: str, req_id: str, new_req=None):
    """Apply one requirement change; returns (new_reqs, ok)."""
    new = dict(reqs)
    if action == "add":
        if req_id in new or new_req is None or new_req.req_id != req_id:
            return reqs, False
        new[req_id] = new_req
    elif action == "update":
        if req_id not in new or new_req is None or new_req.req_id != req_id:
            return reqs, False
        new[req_id] = new_req
    elif action == "remove":
        if req_id not in new:
            return reqs, False
        del new[req_id]
    else:
        return reqs, False
    return new, True


@dataclass(frozen=True)
class GroupInfo:
    """Public joining material: context, challenge, requirements, roster."""

    ctx: object
    chal: bytes
    reqs: dict
    roster: dict

    def to_value(self):
        return {
            "ctx": self.ctx.to_value(),
            "chal": self.chal,
            "reqs": reqs_value(self.reqs),
            "roster": {m: e.to_value() for m, e in self.roster.items()},
        }


@dataclass(frozen=True)
class PresentPackage:
    """What a prospective member hands over: a challenge-bound credential
    presentation and a key package under the same fresh signing key."""

    pres: Presentation
    kp: KeyPackage

    def to_value(self):
        return {"p": self.pres.to_value(), "kp": self.kp.to_value()}

    @classmethod
    def from_value(cls, value):
        return cls(pres=Presentation.from_value(value["p"]), kp=KeyPackage.from_value(value["kp"]))


@dataclass(frozen=True)
class ReqsProposal:
    proposer: str
    action: str
    req_id: str
    group_id: str
    epoch: int
    sig: bytes
    new_req: Requirement | None = None

    def tbs(self) -> bytes:
        body = {
            "by": self.proposer,
            "act": self.action,
            "id": self.req_id,
            "gid": self.group_id,
            "ep": self.epoch,
        }
        if self.new_req is not None:
            body["req"] = self.new_req.to_value()
        return pack("reqs-prop", body)

    def to_value(self):
        body = {
            "by": self.proposer,
            "act": self.action,
            "id": self.req_id,
            "gid": self.group_id,
            "ep": self.epoch,
            "sig": self.sig,
        }
        if self.new_req is not None:
            body["req"] = self.new_req.to_value()
        return body

    @classmethod
    def from_value(cls, value):
        return cls(
            proposer=value["by"],
            action=value["act"],
            req_id=value["id"],
            group_id=value["gid"],
            epoch=value["ep"],
            sig=value["sig"],
            new_req=Requirement.from_value(value["req"]) if "req" in value else None,
        )


@dataclass(frozen=True)
class AaCommit:
    committer: str
    basic: CgkaCommit
    reqs_props: tuple
    welcome: Welcome | None
    reqs_snapshot: dict
    sig: bytes

    def _body(self):
        body = {
            "by": self.committer,
            "c": self.basic.to_value(),
            "rp": [rp.to_value() for rp in self.reqs_props],
            "reqs": reqs_value(self.reqs_snapshot),
        }
        if self.welcome is not None:
            body["w"] = self.welcome.to_value()
        return body

    def tbs(self, chal: bytes) -> bytes:
        body = self._body()
        body["chal"] = chal
        return pack("aa-commit", body)

    def to_value(self):
        body = self._body()
        body["sig"] = self.sig
        return body

    @classmethod
    def from_value(cls, value):
        return cls(
            committer=value["by"],
            basic=CgkaCommit.from_value(value["c"]),
            reqs_props=tuple(ReqsProposal.from_value(v) for v in value["rp"]),
            welcome=Welcome.from_value(value["w"]) if "w" in value else None,
            reqs_snapshot=reqs_from_value(value["reqs"]),
            sig=value["sig"],
        )


def chal_fold(chal: bytes, sig: bytes) -> bytes:
    return hash_bytes(chal + sig)


@dataclass
class UserState:
    self_id: str
    cred: Credential
    cgka: CgkaState
    chal: bytes = b""
    reqs: dict = field(default_factory=dict)
    staged_chal: bytes | None = None
    staged_reqs: dict | None = None
    staged_roster: dict | None = None

    @property
    def in_group(self) -> bool:
        return self.cgka.in_group


def aa_init(self_id: str, pki: PkiDirectory, issuer_id: str, attrs: dict, rng: Rng) -> UserState:
    """Fresh user: a credential from the issuer and an empty group slot."""
    _, cred = pki_issue(pki, issuer_id, attrs, rng)
    return UserState(self_id=self_id, cred=cred, cgka=cgka_init(self_id, rng))


def aa_create(state: UserState, group_id: str, reqs: dict, rng: Rng) -> UserState:
    """Create a group with the given admission requirements.

    The creator's own credential must satisfy them; a group nobody could
    have entered is a configuration mistake."""
    ok, _, _ = reqs_met(state.cred, reqs)
    if not ok:
        raise ProtocolError("creator's credential does not meet the requirements")
    new = copy.deepcopy(state)
    new.cgka = cgka_create(new.cgka, group_id, rng)
    new.chal = b""
    new.reqs = dict(reqs)
    return new


def aa_publish_info(state: UserState) -> GroupInfo:
    if not state.in_group:
        raise ProtocolError("only members publish group info")
    return GroupInfo(
        ctx=cgka_context(state.cgka),
        chal=state.chal,
        reqs=dict(state.reqs),
        roster=dict(state.cgka.members),
    )


def _present_header(chal: bytes, spk: bytes) -> bytes:
    return pack("present", chal, spk)


def aa_present(state: UserState, pki: PkiDirectory, gi: GroupInfo, rng: Rng, kind: str = KP_JOIN) -> PresentPackage:
    """Prepare to enter the advertised group, disclosing the minimum.

    Rotates to a fresh signing key so separate presentations share no key
    material, binds the presentation to the group's challenge and the fresh
    key, and stages the group info needed to finish the join later.
    """
    if state.in_group:
        raise ProtocolError("already in a group")
    if kind not in (KP_ADD, KP_JOIN):
        raise ProtocolError(f"unknown presentation kind {kind!r}")
    ok, claims, _ = reqs_met(state.cred, gi.reqs)
    if not ok:
        raise ProtocolError("credential does not meet the group requirements")
    sig_kp = gen_sig_keypair(rng)
    state.cgka.spk = sig_kp.spk
    state.cgka.ssk = sig_kp.ssk
    header = _present_header(gi.chal, sig_kp.spk)
    ipk = pki.issuer_pk(state.cred.issuer_id)
    disclosed = {k: state.cred.attrs[k] for k in claims}
    pres = abc_prove(ipk, state.cred, disclosed, header, rng)
    if kind == KP_JOIN:
        stage_join(state.cgka, gi.ctx, gi.roster)
    kp = cgka_genkp(state.cgka, kind, rng, ctx=gi.ctx)
    state.staged_chal = gi.chal
    state.staged_reqs = dict(gi.reqs)
    state.staged_roster = dict(gi.roster)
    return PresentPackage(pres=pres, kp=kp)


def validate_pp(
    pki: PkiDirectory,
    chal: bytes,
    reqs: dict,
    group_id: str,
    epoch: int,
    pp: PresentPackage,
    kind: str,
) -> bool:
    """Check a presentation package against the local view of the group.

    The header must carry this group's current challenge and the key the
    key package is signed under, the key package must bind to this group
    state, and the disclosure must exactly match some requirement, no more
    and no less.
    """
    try:
        parts = decode(pp.pres.header)
    except WireError:
        return False
    if not (isinstance(parts, list) and len(parts) == 3 and parts[0] == "present"):
        return False
    _, hdr_chal, hdr_spk = parts
    if hdr_chal != chal or hdr_spk != pp.kp.spk:
        return False
    if pp.kp.kp_type != kind:
        return False
    if pp.kp.group_id != group_id or pp.kp.epoch != epoch:
        return False
    unsigned = KeyPackage(
        pp.kp.kp_type, pp.kp.spk, pp.kp.epk, b"", pp.kp.sealed_k, pp.kp.group_id, pp.kp.epoch
    )
    if not verify(pp.kp.spk, unsigned.tbs(), pp.kp.sig):
        return False
    try:
        ipk = pki.issuer_pk(pp.pres.issuer_id)
    except CredentialError:
        return False
    if not abc_verify_proof(ipk, pp.pres, pp.pres.header):
        return False
    for rid in sorted(reqs):
        req = reqs[rid]
        if req.issuer_id == pp.pres.issuer_id and dict(pp.pres.disc_attrs) == dict(req.attrs):
            return True
    return False


def _pp_from_proposal(prop: Proposal) -> PresentPackage | None:
    if prop.kp is None or prop.ext is None or "pres" not in prop.ext:
        return None
    try:
        return PresentPackage(pres=Presentation.from_value(prop.ext["pres"]), kp=prop.kp)
    except (CredentialError, KeyError, TypeError):
        return None


def aa_propose(
    state: UserState,
    pki: PkiDirectory,
    target: str,
    ptype: str,
    rng: Rng,
    pp: PresentPackage | None = None,
) -> Proposal:
    """Build a proposal; add and join carry the candidate's presentation."""
    if ptype == "add":
        if pp is None:
            raise ProtocolError("add proposal needs a presentation package")
        ctx = cgka_context(state.cgka)
        if not validate_pp(pki, state.chal, state.reqs, ctx.group_id, ctx.epoch, pp, KP_ADD):
            raise ProtocolError("presentation package failed validation")
        return cgka_propose(
            state.cgka, target, "add", rng, kp=pp.kp, ext={"pres": pp.pres.to_value()}
        )
    if ptype == "join":
        if pp is None:
            raise ProtocolError("join proposal needs a presentation package")
        return cgka_propose(
            state.cgka, target, "join", rng, kp=pp.kp, ext={"pres": pp.pres.to_value()}
        )
    if ptype in ("update", "remove"):
        return cgka_propose(state.cgka, target, ptype, rng)
    raise ProtocolError(f"unknown proposal type {ptype!r}")


def aa_propose_reqs(
    state: UserState, action: str, req_id: str, rng: Rng, new_req: Requirement | None = None
) -> ReqsProposal:
    if not state.in_group:
        raise ProtocolError("requirement proposals need group membership")
    _, ok = update_reqs(state.reqs, action, req_id, new_req)
    if not ok:
        raise ProtocolError(f"requirement change {action!r} on {req_id!r} does not apply")
    unsigned = ReqsProposal(
        proposer=state.self_id,
        action=action,
        req_id=req_id,
        group_id=state.cgka.group_id,
        epoch=state.cgka.epoch,
        sig=b"",
        new_req=new_req,
    )
    sig = sign(state.cgka.ssk, unsigned.tbs())
    return ReqsProposal(
        proposer=unsigned.proposer,
        action=action,
        req_id=req_id,
        group_id=unsigned.group_id,
        epoch=unsigned.epoch,
        sig=sig,
        new_req=new_req,
    )


def _verify_reqs_props(members: dict, reqs: dict, reqs_props, group_id: str, epoch: int):
    """Returns (folded_reqs, ok); signatures under pre-commit roster keys."""
    folded = dict(reqs)
    for rp in reqs_props:
        if rp.group_id != group_id or rp.epoch != epoch:
            return reqs, False
        entry = members.get(rp.proposer)
        if entry is None:
            return reqs, False
        unsigned = ReqsProposal(
            rp.proposer, rp.action, rp.req_id, rp.group_id, rp.epoch, b"", rp.new_req
        )
        if not verify(entry.spk, unsigned.tbs(), rp.sig):
            return reqs, False
        folded, ok = update_reqs(folded, rp.action, rp.req_id, rp.new_req)
        if not ok:
            return reqs, False
    return folded, True


def aa_commit(state: UserState, pki: PkiDirectory, props, reqs_props, rng: Rng):
    """Commit proposals and requirement changes; returns (state', commit).

    A member commits adds, updates, and removes. A staged outsider commits
    exactly its own join proposal and no requirement changes. The commit is
    signed under the committer's roster key and the challenge advances by
    folding that signature in.
    """
    props = tuple(props)
    reqs_props = tuple(reqs_props)

    if state.in_group:
        gid, epoch = state.cgka.group_id, state.cgka.epoch
        for prop in props:
            if prop.ptype == "add":
                pp = _pp_from_proposal(prop)
                if pp is None or not validate_pp(pki, state.chal, state.reqs, gid, epoch, pp, KP_ADD):
                    raise ProtocolError("add proposal carries an invalid presentation")
        folded, ok = _verify_reqs_props(state.cgka.members, state.reqs, reqs_props, gid, epoch)
        if not ok:
            raise ProtocolError("requirement proposal failed validation")
        chal = state.chal
    else:
        if reqs_props:
            raise ProtocolError("a joining commit cannot change requirements")
        if state.staged_chal is None or state.staged_reqs is None:
            raise ProtocolError("no staged group to join")
        folded = dict(state.staged_reqs)
        chal = state.staged_chal

    new_cgka, basic, welcome = cgka_commit(state.cgka, props, rng)

    unsigned = AaCommit(
        committer=state.self_id,
        basic=basic,
        reqs_props=reqs_props,
        welcome=welcome,
        reqs_snapshot=folded,
        sig=b"",
    )
    sig = sign(state.cgka.ssk, unsigned.tbs(chal))
    commit = AaCommit(
        committer=state.self_id,
        basic=basic,
        reqs_props=reqs_props,
        welcome=welcome,
        reqs_snapshot=folded,
        sig=sig,
    )

    new = copy.deepcopy(state)
    new.cgka = new_cgka
    new.reqs = folded
    new.chal = chal_fold(chal, sig)
    new.staged_chal = None
    new.staged_reqs = None
    new.staged_roster = None
    return new, commit


def aa_process(state: UserState, pki: PkiDirectory, commit: AaCommit):
    """Apply a commit made by someone else; total.

    Members verify the signature against their own challenge and validate
    every carried presentation before touching group state. A welcomed
    member verifies against the staged challenge from the group info it
    presented to, and adopts the commit's requirement snapshot.
    """
    if state.in_group:
        return _process_as_member(state, pki, commit)
    if (
        commit.welcome is not None
        and state.staged_chal is not None
        and state.self_id in commit.welcome.sealed
    ):
        return _process_as_welcomed(state, commit)
    return state, False


def _committer_spk(state: UserState, commit: AaCommit) -> bytes | None:
    if commit.basic.external:
        props = commit.basic.proposals
        if len(props) == 1 and props[0].kp is not None:
            return props[0].kp.spk
        return None
    entry = state.cgka.members.get(commit.committer)
    return entry.spk if entry is not None else None


def _process_as_member(state: UserState, pki: PkiDirectory, commit: AaCommit):
    spk = _committer_spk(state, commit)
    if spk is None:
        return state, False
    unsigned = AaCommit(
        commit.committer, commit.basic, commit.reqs_props, commit.welcome, commit.reqs_snapshot, b""
    )
    if not verify(spk, unsigned.tbs(state.chal), commit.sig):
        return state, False

    gid, epoch = state.cgka.group_id, state.cgka.epoch
    if commit.basic.external:
        pp = _pp_from_proposal(commit.basic.proposals[0])
        if pp is None or not validate_pp(pki, state.chal, state.reqs, gid, epoch, pp, KP_JOIN):
            return state, False
        if commit.reqs_props:
            return state, False
    else:
        for prop in commit.basic.proposals:
            if prop.ptype == "add":
                pp = _pp_from_proposal(prop)
                if pp is None or not validate_pp(pki, state.chal, state.reqs, gid, epoch, pp, KP_ADD):
                    return state, False

    folded, ok = _verify_reqs_props(
        state.cgka.members, state.reqs, commit.reqs_props, gid, epoch
    )
    if not ok or folded != commit.reqs_snapshot:
        return state, False

    new_cgka, ok = cgka_process_commit(state.cgka, commit.basic)
    if not ok:
        return state, False

    new = copy.deepcopy(state)
    new.cgka = new_cgka
    new.reqs = folded
    new.chal = chal_fold(state.chal, commit.sig)
    return new, True


def _process_as_welcomed(state: UserState, commit: AaCommit):
    roster = state.staged_roster or {}
    entry = roster.get(commit.committer)
    if entry is None:
        return state, False
    unsigned = AaCommit(
        commit.committer, commit.basic, commit.reqs_props, commit.welcome, commit.reqs_snapshot, b""
    )
    if not verify(entry.spk, unsigned.tbs(state.staged_chal), commit.sig):
        return state, False
    new_cgka, ok = cgka_process_welcome(state.cgka, commit.welcome)
    if not ok:
        return state, False
    new = copy.deepcopy(state)
    new.cgka = new_cgka
    new.reqs = dict(commit.reqs_snapshot)
    new.chal = chal_fold(state.staged_chal, commit.sig)
    new.staged_chal = None
    new.staged_reqs = None
    new.staged_roster = None
    return new, True
