"""Oracle environment the security experiments run against.

A GameEnv owns a PKI, a population of users, and a call log. Adversaries
drive honest parties only through the Q_* oracles, which mirror the
protocol operations one to one; whatever an oracle returns is considered
published and free for the adversary to replay, tamper with, or splice.
Credential exposure is tracked so win conditions can exclude trivial
victories bought with a leaked credential.
"""

from __future__ import annotations

from ..cgka import KP_ADD, KP_JOIN
from ..credentials import Credential, pki_init
from ..primitives import Rng
from ..protocol import (
    AaCommit,
    GroupInfo,
    PresentPackage,
    ProtocolError,
    aa_commit,
    aa_create,
    aa_init,
    aa_present,
    aa_process,
    aa_propose,
    aa_propose_reqs,
    aa_publish_info,
)


class GameEnv:
    def __init__(self, rng: Rng, scheme: str = "bbs-style", issuers=("campus", "guild")):
        self.rng = rng
        self.scheme = scheme
        self.pki = pki_init(issuers, rng.spawn(0), scheme=scheme)
        self.users = {}
        self.exposed = set()
        self.log = []
        self._calls = 0

    def _r(self) -> Rng:
        self._calls += 1
        return self.rng.spawn(self._calls)

    def _user(self, user_id: str):
        if user_id not in self.users:
            raise ProtocolError(f"unknown user {user_id!r}")
        return self.users[user_id]

    def Q_Init(self, user_id: str, issuer_id: str, attrs: dict) -> None:
        if user_id in self.users:
            raise ProtocolError(f"user {user_id!r} already initialised")
        self.users[user_id] = aa_init(user_id, self.pki, issuer_id, attrs, self._r())
        self.log.append(("init", user_id, issuer_id, tuple(sorted(attrs.items()))))

    def Q_Create(self, user_id: str, group_id: str, reqs: dict) -> None:
        self.users[user_id] = aa_create(self._user(user_id), group_id, reqs, self._r())
        self.log.append(("create", user_id, group_id, tuple(sorted(reqs))))

    def Q_PublishInfo(self, user_id: str) -> GroupInfo:
        gi = aa_publish_info(self._user(user_id))
        self.log.append(("publish", user_id, gi.ctx.epoch))
        return gi

    def Q_Present(self, user_id: str, gi: GroupInfo, kind: str = KP_JOIN) -> PresentPackage:
        pp = aa_present(self._user(user_id), self.pki, gi, self._r(), kind=kind)
        self.log.append(("present", user_id, kind, gi.ctx.epoch))
        return pp

    def Q_Propose(self, user_id: str, target: str, ptype: str, via: str | None = None):
        """Build a proposal on user_id's state.

        For add, user_id is a member and target the candidate: the env
        publishes user_id's group info, has the candidate present, and
        builds the proposal. For join, user_id is the joiner and `via`
        names the member whose published info the join runs against.
        """
        if ptype == "add":
            gi = aa_publish_info(self._user(user_id))
            pp = self.Q_Present(target, gi, kind=KP_ADD)
            prop = aa_propose(self._user(user_id), self.pki, target, "add", self._r(), pp=pp)
        elif ptype == "join":
            if via is None:
                raise ProtocolError("join proposals need a member to publish group info")
            gi = self.Q_PublishInfo(via)
            pp = self.Q_Present(user_id, gi, kind=KP_JOIN)
            prop = aa_propose(self._user(user_id), self.pki, target, "join", self._r(), pp=pp)
        else:
            prop = aa_propose(self._user(user_id), self.pki, target, ptype, self._r())
        self.log.append(("propose", user_id, target, ptype))
        return prop

    def Q_ProposeReqs(self, user_id: str, action: str, req_id: str, new_req=None):
        rp = aa_propose_reqs(self._user(user_id), action, req_id, self._r(), new_req=new_req)
        self.log.append(("propose-reqs", user_id, action, req_id))
        return rp

    def Q_Commit(self, user_id: str, props=(), reqs_props=()) -> AaCommit:
        state, commit = aa_commit(self._user(user_id), self.pki, props, reqs_props, self._r())
        self.users[user_id] = state
        self.log.append(("commit", user_id, commit.basic.epoch))
        return commit

    def Q_Process(self, user_id: str, commit: AaCommit) -> bool:
        state, ok = aa_process(self._user(user_id), self.pki, commit)
        self.users[user_id] = state
        self.log.append(("process", user_id, bool(ok)))
        return ok

    def Q_ExposeCred(self, user_id: str) -> Credential:
        self.exposed.add(user_id)
        self.log.append(("expose", user_id))
        return self._user(user_id).cred
