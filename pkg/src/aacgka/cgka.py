"""Continuous group key agreement with propose-and-commit epochs.

Each epoch has one shared secret. A commit gathers proposals (add, update,
remove, join), advances the epoch, and fans the fresh commit secret out to
every post-commit member under their keying material, so there is no tree
structure here, just one sealed slot per member. Welcome messages carry the
new epoch secret to members added by the commit. An external join is a
commit issued by the joiner: the join key package seals a secret k to the
group's epoch-derived key pair, members recover k from the key package, and
both sides derive the next epoch secret from k and the transcript, so no
per-member slots are needed.

State changes follow one discipline: GenKP and Propose record retained
secrets on the caller's state in place, Commit returns a fresh state, and
the process functions are total, returning the untouched input state with
ok=False instead of raising on anything invalid.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .primitives import (
    KemKeyPair,
    Rng,
    SealError,
    gen_kem_keypair,
    gen_sig_keypair,
    hash_bytes,
    kdf,
    open_sealed,
    seal,
    sign,
    verify,
)
from .wire import encode, pack

KP_ADD = "add"
KP_JOIN = "join"

PROP_TYPES = ("add", "update", "remove", "join")

SECRET_LEN = 32


class GroupError(Exception):
    """Raised when a caller asks for an operation its state cannot perform."""


@dataclass(frozen=True)
class MemberEntry:
    member_id: str
    spk: bytes
    epk: bytes

    def to_value(self):
        return {"id": self.member_id, "spk": self.spk, "epk": self.epk}

    @classmethod
    def from_value(cls, value):
        return cls(member_id=value["id"], spk=value["spk"], epk=value["epk"])


@dataclass(frozen=True)
class KeyPackage:
    kp_type: str
    spk: bytes
    epk: bytes
    sig: bytes
    sealed_k: bytes | None = None
    group_id: str | None = None
    epoch: int | None = None

    def tbs(self) -> bytes:
        body = {"t": self.kp_type, "spk": self.spk, "epk": self.epk}
        if self.sealed_k is not None:
            body["sk"] = self.sealed_k
        if self.group_id is not None:
            body["gid"] = self.group_id
            body["ep"] = self.epoch
        return pack("kp", body)

    def to_value(self):
        body = {"t": self.kp_type, "spk": self.spk, "epk": self.epk, "sig": self.sig}
        if self.sealed_k is not None:
            body["sk"] = self.sealed_k
        if self.group_id is not None:
            body["gid"] = self.group_id
            body["ep"] = self.epoch
        return body

    @classmethod
    def from_value(cls, value):
        return cls(
            kp_type=value["t"],
            spk=value["spk"],
            epk=value["epk"],
            sig=value["sig"],
            sealed_k=value.get("sk"),
            group_id=value.get("gid"),
            epoch=value.get("ep"),
        )


@dataclass(frozen=True)
class Proposal:
    ptype: str
    proposer: str
    target: str
    group_id: str
    epoch: int
    kp: KeyPackage | None = None
    new_epk: bytes | None = None
    ext: dict | None = None

    def to_value(self):
        body = {
            "pt": self.ptype,
            "by": self.proposer,
            "tgt": self.target,
            "gid": self.group_id,
            "ep": self.epoch,
        }
        if self.kp is not None:
            body["kp"] = self.kp.to_value()
        if self.new_epk is not None:
            body["epk"] = self.new_epk
        if self.ext is not None:
            body["ext"] = self.ext
        return body

    @classmethod
    def from_value(cls, value):
        return cls(
            ptype=value["pt"],
            proposer=value["by"],
            target=value["tgt"],
            group_id=value["gid"],
            epoch=value["ep"],
            kp=KeyPackage.from_value(value["kp"]) if "kp" in value else None,
            new_epk=value.get("epk"),
            ext=value.get("ext"),
        )


@dataclass(frozen=True)
class CgkaCommit:
    group_id: str
    epoch: int
    committer: str
    proposals: tuple
    slots: dict
    external: bool

    def to_value(self):
        return {
            "gid": self.group_id,
            "ep": self.epoch,
            "by": self.committer,
            "props": [p.to_value() for p in self.proposals],
            "slots": dict(self.slots),
            "ext": 1 if self.external else 0,
        }

    @classmethod
    def from_value(cls, value):
        return cls(
            group_id=value["gid"],
            epoch=value["ep"],
            committer=value["by"],
            proposals=tuple(Proposal.from_value(p) for p in value["props"]),
            slots=dict(value["slots"]),
            external=bool(value["ext"]),
        )


@dataclass(frozen=True)
class Welcome:
    group_id: str
    epoch: int
    roster: dict
    transcript_hash: bytes
    sealed: dict

    def to_value(self):
        return {
            "gid": self.group_id,
            "ep": self.epoch,
            "roster": {m: e.to_value() for m, e in self.roster.items()},
            "th": self.transcript_hash,
            "sealed": dict(self.sealed),
        }

    @classmethod
    def from_value(cls, value):
        return cls(
            group_id=value["gid"],
            epoch=value["ep"],
            roster={m: MemberEntry.from_value(e) for m, e in value["roster"].items()},
            transcript_hash=value["th"],
            sealed=dict(value["sealed"]),
        )


@dataclass(frozen=True)
class GroupContext:
    group_id: str
    epoch: int
    group_pk: bytes
    transcript_hash: bytes
    roster_hash: bytes

    def to_value(self):
        return {
            "gid": self.group_id,
            "ep": self.epoch,
            "gpk": self.group_pk,
            "th": self.transcript_hash,
            "rh": self.roster_hash,
        }

    @classmethod
    def from_value(cls, value):
        return cls(
            group_id=value["gid"],
            epoch=value["ep"],
            group_pk=value["gpk"],
            transcript_hash=value["th"],
            roster_hash=value["rh"],
        )


@dataclass
class CgkaState:
    self_id: str
    spk: bytes
    ssk: bytes
    group_id: str | None = None
    epoch: int = 0
    members: dict = field(default_factory=dict)
    epoch_secret: bytes | None = None
    transcript_hash: bytes = b""
    esk: bytes | None = None
    kp_esks: dict = field(default_factory=dict)
    join_keys: dict = field(default_factory=dict)
    pending_ctx: GroupContext | None = None
    pending_roster: dict | None = None

    @property
    def in_group(self) -> bool:
        return self.epoch_secret is not None and self.self_id in self.members


def roster_hash(members: dict) -> bytes:
    return hash_bytes(encode({m: e.to_value() for m, e in members.items()}))


def secret_fingerprint(epoch_secret: bytes | None) -> bytes:
    """Public check value for agreement tests; reveals nothing usable."""
    if epoch_secret is None:
        return b""
    return kdf(epoch_secret, "fingerprint", b"")[:16]


def _group_kem(group_id: str, epoch: int, epoch_secret: bytes) -> KemKeyPair:
    """Epoch-scoped key pair every member can derive; its public half is the
    group key outsiders seal to."""
    seed = kdf(epoch_secret, "group-kem", pack(group_id, epoch))
    class _Fixed:
        def __init__(self, b):
            self._b = b

        def bytes(self, n):
            assert n == len(self._b)
            return self._b

    return gen_kem_keypair(_Fixed(seed))  # type: ignore[arg-type]


def cgka_context(state: CgkaState) -> GroupContext:
    if not state.in_group:
        raise GroupError("no group context outside a group")
    kem = _group_kem(state.group_id, state.epoch, state.epoch_secret)
    return GroupContext(
        group_id=state.group_id,
        epoch=state.epoch,
        group_pk=kem.epk,
        transcript_hash=state.transcript_hash,
        roster_hash=roster_hash(state.members),
    )


def cgka_init(self_id: str, rng: Rng) -> CgkaState:
    kp = gen_sig_keypair(rng)
    return CgkaState(self_id=self_id, spk=kp.spk, ssk=kp.ssk)


def cgka_create(state: CgkaState, group_id: str, rng: Rng) -> CgkaState:
    if state.in_group:
        raise GroupError("already in a group")
    new = copy.deepcopy(state)
    kem = gen_kem_keypair(rng)
    new.group_id = group_id
    new.epoch = 0
    new.members = {state.self_id: MemberEntry(state.self_id, new.spk, kem.epk)}
    new.epoch_secret = rng.bytes(SECRET_LEN)
    new.transcript_hash = hash_bytes(pack("transcript", group_id))
    new.esk = kem.esk
    return new


def cgka_genkp(state: CgkaState, kp_type: str, rng: Rng, ctx: GroupContext | None = None) -> KeyPackage:
    """Fresh key package; retains its secrets on the caller's state.

    Add packages may be group-agnostic. Join packages need the target
    group's context: a fresh k is sealed to the group key so that members
    can recover it from the package itself.
    """
    if kp_type not in (KP_ADD, KP_JOIN):
        raise GroupError(f"unknown key package type {kp_type!r}")
    kem = gen_kem_keypair(rng)
    sealed_k = None
    group_id = epoch = None
    if kp_type == KP_JOIN:
        if ctx is None:
            raise GroupError("join package needs a group context")
        k = rng.bytes(SECRET_LEN)
        sealed_k = seal(ctx.group_pk, k, rng)
        group_id, epoch = ctx.group_id, ctx.epoch
        state.join_keys[kem.epk] = k
    elif ctx is not None:
        group_id, epoch = ctx.group_id, ctx.epoch
    unsigned = KeyPackage(kp_type, state.spk, kem.epk, b"", sealed_k, group_id, epoch)
    kp = KeyPackage(kp_type, state.spk, kem.epk, sign(state.ssk, unsigned.tbs()), sealed_k, group_id, epoch)
    state.kp_esks[kem.epk] = kem.esk
    return kp


def cgka_propose(
    state: CgkaState,
    target: str,
    ptype: str,
    rng: Rng,
    kp: KeyPackage | None = None,
    ext: dict | None = None,
) -> Proposal:
    if ptype not in PROP_TYPES:
        raise GroupError(f"unknown proposal type {ptype!r}")
    if ptype == "join":
        if state.in_group:
            raise GroupError("members do not propose joins")
        if target != state.self_id:
            raise GroupError("join proposals are self-made")
        if kp is None or kp.kp_type != KP_JOIN:
            raise GroupError("join proposal needs a join key package")
        if state.pending_ctx is None:
            raise GroupError("no staged group to join")
        return Proposal(
            ptype="join",
            proposer=state.self_id,
            target=target,
            group_id=kp.group_id,
            epoch=kp.epoch,
            kp=kp,
            ext=ext,
        )
    if not state.in_group:
        raise GroupError("proposals require group membership")
    new_epk = None
    if ptype == "add":
        if kp is None or kp.kp_type != KP_ADD:
            raise GroupError("add proposal needs an add key package")
        if target in state.members:
            raise GroupError(f"{target!r} is already a member")
    elif ptype == "update":
        if target != state.self_id:
            raise GroupError("update proposals are self-made")
        kem = gen_kem_keypair(rng)
        state.kp_esks[kem.epk] = kem.esk
        new_epk = kem.epk
        kp = None
    elif ptype == "remove":
        if target not in state.members:
            raise GroupError(f"{target!r} is not a member")
        kp = None
    return Proposal(
        ptype=ptype,
        proposer=state.self_id,
        target=target,
        group_id=state.group_id,
        epoch=state.epoch,
        kp=kp,
        new_epk=new_epk,
        ext=ext,
    )


def _check_kp(kp: KeyPackage, expect_type: str, group_id=None, epoch=None) -> None:
    if kp.kp_type != expect_type:
        raise GroupError("key package type mismatch")
    if not verify(kp.spk, KeyPackage(
        kp.kp_type, kp.spk, kp.epk, b"", kp.sealed_k, kp.group_id, kp.epoch
    ).tbs(), kp.sig):
        raise GroupError("key package signature invalid")
    if expect_type == KP_JOIN:
        if kp.group_id != group_id or kp.epoch != epoch:
            raise GroupError("join package bound to a different group state")
    elif kp.group_id is not None and (kp.group_id != group_id or kp.epoch != epoch):
        raise GroupError("add package bound to a different group state")


def _apply_proposals(members: dict, proposals, group_id: str, epoch: int) -> tuple[dict, list]:
    """Validate and apply in add, update, remove order; returns the new
    roster and the ids added. Raises GroupError on any invalid proposal."""
    adds = [p for p in proposals if p.ptype == "add"]
    updates = [p for p in proposals if p.ptype == "update"]
    removes = [p for p in proposals if p.ptype == "remove"]
    if len(adds) + len(updates) + len(removes) != len(proposals):
        raise GroupError("join proposals cannot ride a member commit")
    new_members = dict(members)
    added = []
    for p in proposals:
        if p.group_id != group_id or p.epoch != epoch:
            raise GroupError("proposal bound to a different group state")
        if p.proposer not in members:
            raise GroupError("proposer is not a member")
    for p in adds:
        if p.target in new_members:
            raise GroupError(f"add of existing member {p.target!r}")
        _check_kp(p.kp, KP_ADD, group_id, epoch)
        new_members[p.target] = MemberEntry(p.target, p.kp.spk, p.kp.epk)
        added.append(p.target)
    for p in updates:
        if p.target != p.proposer or p.target not in new_members:
            raise GroupError("invalid update proposal")
        entry = new_members[p.target]
        if p.new_epk is None:
            raise GroupError("update proposal without fresh key")
        new_members[p.target] = MemberEntry(entry.member_id, entry.spk, p.new_epk)
    for p in removes:
        if p.target not in new_members:
            raise GroupError(f"remove of non-member {p.target!r}")
        if p.target in added:
            raise GroupError("remove of a member added in the same commit")
        del new_members[p.target]
    return new_members, added


def _resolve_esk(state: CgkaState, my_entry: MemberEntry) -> bytes | None:
    if my_entry.epk in state.kp_esks:
        return state.kp_esks[my_entry.epk]
    return state.esk


def cgka_commit(state: CgkaState, proposals, rng: Rng):
    """Build a commit over the proposals.

    Returns (new_state, commit, welcome_or_none). Members commit adds,
    updates, and removes; a non-member holding a staged join commits
    exactly its own join proposal.
    """
    proposals = tuple(proposals)
    if not state.in_group:
        return _commit_external(state, proposals)
    new_members, added = _apply_proposals(state.members, proposals, state.group_id, state.epoch)
    if state.self_id not in new_members:
        raise GroupError("cannot commit own removal")

    commit_secret = rng.bytes(SECRET_LEN)
    slots = {}
    for member_id, entry in new_members.items():
        slots[member_id] = seal(entry.epk, commit_secret, rng)
    commit = CgkaCommit(
        group_id=state.group_id,
        epoch=state.epoch,
        committer=state.self_id,
        proposals=proposals,
        slots=slots,
        external=False,
    )
    new_th = hash_bytes(state.transcript_hash + encode(commit.to_value()))
    new_secret = kdf(state.epoch_secret, "epoch", pack(commit_secret, new_th))

    welcome = None
    if added:
        sealed = {m: seal(new_members[m].epk, new_secret, rng) for m in added}
        welcome = Welcome(
            group_id=state.group_id,
            epoch=state.epoch + 1,
            roster=new_members,
            transcript_hash=new_th,
            sealed=sealed,
        )

    new = copy.deepcopy(state)
    new.members = new_members
    new.epoch += 1
    new.epoch_secret = new_secret
    new.transcript_hash = new_th
    new.esk = _resolve_esk(new, new_members[state.self_id])
    return new, commit, welcome


def _commit_external(state: CgkaState, proposals):
    if len(proposals) != 1 or proposals[0].ptype != "join":
        raise GroupError("external commit covers exactly the own join proposal")
    prop = proposals[0]
    if prop.proposer != state.self_id or prop.kp is None:
        raise GroupError("external commit covers exactly the own join proposal")
    ctx, roster = state.pending_ctx, state.pending_roster
    if ctx is None or roster is None:
        raise GroupError("no staged group to join")
    if prop.group_id != ctx.group_id or prop.epoch != ctx.epoch:
        raise GroupError("join proposal bound to a different group state")
    if state.self_id in roster:
        raise GroupError("joiner is already on the roster")
    k = state.join_keys.get(prop.kp.epk)
    if k is None:
        raise GroupError("join key package was not generated here")

    commit = CgkaCommit(
        group_id=ctx.group_id,
        epoch=ctx.epoch,
        committer=state.self_id,
        proposals=(prop,),
        slots={},
        external=True,
    )
    new_th = hash_bytes(ctx.transcript_hash + encode(commit.to_value()))
    new_secret = kdf(k, "ext-epoch", pack(new_th, ctx.group_id, ctx.epoch + 1))

    new = copy.deepcopy(state)
    new.group_id = ctx.group_id
    new.epoch = ctx.epoch + 1
    new.members = dict(roster)
    new.members[state.self_id] = MemberEntry(state.self_id, prop.kp.spk, prop.kp.epk)
    new.epoch_secret = new_secret
    new.transcript_hash = new_th
    new.esk = state.kp_esks.get(prop.kp.epk)
    new.pending_ctx = None
    new.pending_roster = None
    return new, commit, None


def stage_join(state: CgkaState, ctx: GroupContext, roster: dict) -> None:
    """Record the public group state a join will be built against."""
    if roster_hash(roster) != ctx.roster_hash:
        raise GroupError("roster does not match the advertised context")
    state.pending_ctx = ctx
    state.pending_roster = dict(roster)


def cgka_process_commit(state: CgkaState, commit: CgkaCommit) -> tuple[CgkaState, bool]:
    """Apply a commit from another member; total."""
    if not state.in_group:
        return state, False
    if commit.group_id != state.group_id or commit.epoch != state.epoch:
        return state, False
    if commit.committer == state.self_id:
        return state, False

    if commit.external:
        return _process_external(state, commit)

    if commit.committer not in state.members:
        return state, False
    try:
        new_members, _ = _apply_proposals(state.members, commit.proposals, state.group_id, state.epoch)
    except GroupError:
        return state, False
    expected_slots = sorted(new_members)
    if sorted(commit.slots) != expected_slots:
        return state, False

    new_th = hash_bytes(state.transcript_hash + encode(commit.to_value()))

    if state.self_id not in new_members:
        # removed by this commit: acknowledge it, lose the new secret
        new = copy.deepcopy(state)
        new.members = new_members
        new.epoch += 1
        new.epoch_secret = None
        new.transcript_hash = new_th
        return new, True

    my_entry = new_members[state.self_id]
    esk = state.kp_esks.get(my_entry.epk, state.esk)
    try:
        commit_secret = open_sealed(esk, commit.slots[state.self_id])
    except (SealError, TypeError):
        return state, False
    new_secret = kdf(state.epoch_secret, "epoch", pack(commit_secret, new_th))

    new = copy.deepcopy(state)
    new.members = new_members
    new.epoch += 1
    new.epoch_secret = new_secret
    new.transcript_hash = new_th
    new.esk = _resolve_esk(new, my_entry)
    return new, True


def _process_external(state: CgkaState, commit: CgkaCommit) -> tuple[CgkaState, bool]:
    if len(commit.proposals) != 1:
        return state, False
    prop = commit.proposals[0]
    if (
        prop.ptype != "join"
        or prop.proposer != commit.committer
        or prop.target != commit.committer
        or commit.committer in state.members
        or prop.kp is None
        or commit.slots
    ):
        return state, False
    try:
        _check_kp(prop.kp, KP_JOIN, state.group_id, state.epoch)
    except GroupError:
        return state, False
    if prop.group_id != state.group_id or prop.epoch != state.epoch:
        return state, False

    kem = _group_kem(state.group_id, state.epoch, state.epoch_secret)
    try:
        k = open_sealed(kem.esk, prop.kp.sealed_k)
    except SealError:
        return state, False

    new_th = hash_bytes(state.transcript_hash + encode(commit.to_value()))
    new_secret = kdf(k, "ext-epoch", pack(new_th, state.group_id, state.epoch + 1))

    new = copy.deepcopy(state)
    new.members = dict(state.members)
    new.members[commit.committer] = MemberEntry(commit.committer, prop.kp.spk, prop.kp.epk)
    new.epoch += 1
    new.epoch_secret = new_secret
    new.transcript_hash = new_th
    return new, True


def cgka_process_welcome(state: CgkaState, welcome: Welcome) -> tuple[CgkaState, bool]:
    """Install group state from a welcome addressed to this member; total."""
    if state.in_group:
        return state, False
    sealed = welcome.sealed.get(state.self_id)
    entry = welcome.roster.get(state.self_id)
    if sealed is None or entry is None:
        return state, False
    esk = state.kp_esks.get(entry.epk)
    if esk is None:
        return state, False
    try:
        epoch_secret = open_sealed(esk, sealed)
    except SealError:
        return state, False

    new = copy.deepcopy(state)
    new.group_id = welcome.group_id
    new.epoch = welcome.epoch
    new.members = dict(welcome.roster)
    new.epoch_secret = epoch_secret
    new.transcript_hash = welcome.transcript_hash
    new.esk = esk
    new.pending_ctx = None
    new.pending_roster = None
    return new, True
