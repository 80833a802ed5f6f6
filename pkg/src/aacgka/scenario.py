"""Deterministic scenario runner over a line oriented script format.

A scenario drives one group through its lifecycle from a single seed, so
the same script and seed always produce the same transcript. Commands,
one per line, `#` starts a comment:

    init <user> <issuer> [k=v ...]          issue a credential, set up state
    create <user> <group> <req>[,<req>...]  create a group with requirements
    publish <user>                          record current group info
    present <cand> <member> <add|join>      candidate presents to member's info
    propose <member> add <cand>             uses the candidate's presentation
    propose <user> join                     joiner's own pending presentation
    propose <member> update
    propose <member> remove <target>
    propose_reqs <member> add|update <req>  requirement change proposals
    propose_reqs <member> remove <req-id>
    commit <user>                           commit all queued proposals
    process_all                             deliver the commit to everyone
    assert_replay_rejected                  re-delivery must fail everywhere
    expose <user>                           hand the credential to the log
    assert_state k=v ...                    epoch= members= reqs= group=

A requirement spells `id:issuer:k=v;k=v` with an empty attribute part
meaning bare possession of a credential from that issuer.

After every process_all the runner checks that all members left in the
group hold byte identical digests (epoch, challenge, requirement hash,
epoch secret fingerprint) and refuses to continue otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cgka import KP_ADD, KP_JOIN, secret_fingerprint
from .credentials import DEFAULT_MAX_ATTRS, PkiDirectory, abc_keygen
from .primitives import Rng, hash_bytes
from .protocol import (
    Requirement,
    aa_commit,
    aa_create,
    aa_init,
    aa_present,
    aa_process,
    aa_propose,
    aa_propose_reqs,
    aa_publish_info,
    reqs_value,
)
from .wire import encode


class ScenarioError(Exception):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


def parse_attrs(tokens) -> dict:
    attrs = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScenarioError(f"expected k=v, got {tok!r}")
        k, v = tok.split("=", 1)
        if not k:
            raise ScenarioError(f"empty attribute name in {tok!r}")
        attrs[k] = v
    return attrs


def parse_requirement(text: str) -> Requirement:
    parts = text.split(":", 2)
    if len(parts) != 3:
        raise ScenarioError(f"requirement {text!r} is not id:issuer:attrs")
    rid, issuer, attr_part = parts
    if not rid or not issuer:
        raise ScenarioError(f"requirement {text!r} is missing id or issuer")
    attrs = parse_attrs(attr_part.split(";")) if attr_part else {}
    return Requirement(rid, issuer, attrs)


def user_digest(user) -> tuple:
    """What every member must agree on, byte for byte."""
    return (
        user.cgka.epoch,
        user.chal,
        hash_bytes(encode(reqs_value(user.reqs))),
        secret_fingerprint(user.cgka.epoch_secret),
    )


@dataclass
class ScenarioResult:
    transcript: list = field(default_factory=list)
    commits: list = field(default_factory=list)
    digests: list = field(default_factory=list)

    def text(self) -> str:
        return "\n".join(self.transcript) + "\n"


class ScenarioRunner:
    def __init__(self, seed: int = 0, scheme: str = "bbs-style"):
        self.scheme = scheme
        self.rng = Rng(seed)
        self.pki = PkiDirectory(scheme=scheme, issuers={})
        self.users = {}
        self.group_id = None
        self.pending_pp = {}
        self.queue = []
        self.reqs_queue = []
        self.last_commit = None
        self.last_committer = None
        self.result = ScenarioResult()
        self._calls = 0

    def _r(self) -> Rng:
        self._calls += 1
        return self.rng.spawn(self._calls)

    def _say(self, line: str) -> None:
        self.result.transcript.append(line)

    def _user(self, name: str):
        if name not in self.users:
            raise ScenarioError(f"unknown user {name!r}")
        return self.users[name]

    def _ensure_issuer(self, issuer_id: str) -> None:
        if issuer_id not in self.pki.issuers:
            self.pki.issuers[issuer_id] = abc_keygen(
                self.scheme, issuer_id, self._r(), DEFAULT_MAX_ATTRS
            )

    # ------------------------------------------------------------- commands

    def cmd_init(self, args):
        if len(args) < 2:
            raise ScenarioError("init needs <user> <issuer> [k=v ...]")
        name, issuer = args[0], args[1]
        if name in self.users:
            raise ScenarioError(f"user {name!r} already initialised")
        self._ensure_issuer(issuer)
        attrs = parse_attrs(args[2:])
        self.users[name] = aa_init(name, self.pki, issuer, attrs, self._r())
        self._say(f"init {name} issuer={issuer} attrs={sorted(attrs.items())}")

    def cmd_create(self, args):
        if len(args) != 3:
            raise ScenarioError("create needs <user> <group> <req>[,<req>...]")
        name, group_id, req_text = args
        if self.group_id is not None:
            raise ScenarioError("a scenario drives exactly one group")
        reqs = {}
        for part in req_text.split(","):
            req = parse_requirement(part)
            if req.req_id in reqs:
                raise ScenarioError(f"duplicate requirement id {req.req_id!r}")
            self._ensure_issuer(req.issuer_id)
            reqs[req.req_id] = req
        self.users[name] = aa_create(self._user(name), group_id, reqs, self._r())
        self.group_id = group_id
        self._say(f"create {name} group={group_id} reqs={sorted(reqs)}")

    def cmd_publish(self, args):
        if len(args) != 1:
            raise ScenarioError("publish needs <user>")
        gi = aa_publish_info(self._user(args[0]))
        self._say(
            f"publish {args[0]} epoch={gi.ctx.epoch} chal={gi.chal.hex()[:16]}"
            f" roster={sorted(gi.roster)}"
        )

    def cmd_present(self, args):
        if len(args) != 3 or args[2] not in (KP_ADD, KP_JOIN):
            raise ScenarioError("present needs <cand> <member> <add|join>")
        cand, member, kind = args
        gi = aa_publish_info(self._user(member))
        pp = aa_present(self._user(cand), self.pki, gi, self._r(), kind=kind)
        self.pending_pp[cand] = (pp, kind)
        self._say(f"present {cand} via={member} kind={kind} disclosed={sorted(pp.pres.disc_attrs)}")

    def cmd_propose(self, args):
        if len(args) < 2:
            raise ScenarioError("propose needs <user> <type> [target]")
        name, ptype = args[0], args[1]
        if ptype == "add":
            if len(args) != 3:
                raise ScenarioError("propose add needs a candidate")
            cand = args[2]
            if cand not in self.pending_pp or self.pending_pp[cand][1] != KP_ADD:
                raise ScenarioError(f"no pending add presentation for {cand!r}")
            pp, _ = self.pending_pp.pop(cand)
            prop = aa_propose(self._user(name), self.pki, cand, "add", self._r(), pp=pp)
        elif ptype == "join":
            if len(args) != 2:
                raise ScenarioError("propose join takes no target")
            if name not in self.pending_pp or self.pending_pp[name][1] != KP_JOIN:
                raise ScenarioError(f"no pending join presentation for {name!r}")
            pp, _ = self.pending_pp.pop(name)
            prop = aa_propose(self._user(name), self.pki, name, "join", self._r(), pp=pp)
        elif ptype == "update":
            if len(args) != 2:
                raise ScenarioError("propose update takes no target")
            prop = aa_propose(self._user(name), self.pki, name, "update", self._r())
        elif ptype == "remove":
            if len(args) != 3:
                raise ScenarioError("propose remove needs a target")
            prop = aa_propose(self._user(name), self.pki, args[2], "remove", self._r())
        else:
            raise ScenarioError(f"unknown proposal type {ptype!r}")
        self.queue.append(prop)
        self._say(f"propose {name} {ptype}" + (f" {args[2]}" if len(args) == 3 else ""))

    def cmd_propose_reqs(self, args):
        if len(args) != 3:
            raise ScenarioError("propose_reqs needs <member> <add|update|remove> <req|req-id>")
        name, action, spec = args
        if action in ("add", "update"):
            req = parse_requirement(spec)
            self._ensure_issuer(req.issuer_id)
            rp = aa_propose_reqs(self._user(name), action, req.req_id, self._r(), new_req=req)
        elif action == "remove":
            rp = aa_propose_reqs(self._user(name), "remove", spec, self._r())
        else:
            raise ScenarioError(f"unknown requirement action {action!r}")
        self.reqs_queue.append(rp)
        self._say(f"propose_reqs {name} {action} {spec}")

    def cmd_commit(self, args):
        if len(args) != 1:
            raise ScenarioError("commit needs <user>")
        name = args[0]
        props, self.queue = self.queue, []
        reqs_props, self.reqs_queue = self.reqs_queue, []
        state, commit = aa_commit(self._user(name), self.pki, props, reqs_props, self._r())
        self.users[name] = state
        self.last_commit = commit
        self.last_committer = name
        self.result.commits.append(commit)
        self._say(
            f"commit {name} epoch={commit.basic.epoch}->{commit.basic.epoch + 1}"
            f" external={commit.basic.external} sig={commit.sig.hex()[:16]}"
        )

    def cmd_process_all(self, args):
        if args:
            raise ScenarioError("process_all takes no arguments")
        if self.last_commit is None:
            raise ScenarioError("no commit to process")
        commit = self.last_commit
        welcomed = set(commit.welcome.sealed) if commit.welcome is not None else set()
        processed = []
        for name in sorted(self.users):
            if name == self.last_committer:
                continue
            user = self.users[name]
            if user.in_group:
                self.users[name], ok = aa_process(user, self.pki, commit)
                if not ok:
                    raise ScenarioError(f"member {name!r} rejected an honest commit")
                processed.append(name)
            elif name in welcomed:
                self.users[name], ok = aa_process(user, self.pki, commit)
                if not ok:
                    raise ScenarioError(f"welcomed member {name!r} failed to join")
                processed.append(name)
        digest = self._check_agreement()
        members = sorted(n for n, u in self.users.items() if u.in_group)
        self.result.digests.append((digest, tuple(members)))
        self._say(
            f"process_all delivered={processed} epoch={digest[0]}"
            f" chal={digest[1].hex()[:16]} reqs={digest[2].hex()[:16]}"
            f" fp={digest[3].hex()[:16]} members={members}"
        )

    def cmd_assert_replay_rejected(self, args):
        if args:
            raise ScenarioError("assert_replay_rejected takes no arguments")
        if self.last_commit is None:
            raise ScenarioError("no commit to replay")
        for name in sorted(self.users):
            user = self.users[name]
            if name == self.last_committer or not user.in_group:
                continue
            _, ok = aa_process(user, self.pki, self.last_commit)
            if ok:
                raise ScenarioError(f"member {name!r} accepted a replayed commit")
        self._say("assert_replay_rejected ok")

    def cmd_expose(self, args):
        if len(args) != 1:
            raise ScenarioError("expose needs <user>")
        cred = self._user(args[0]).cred
        self._say(f"expose {args[0]} issuer={cred.issuer_id} attrs={sorted(cred.attrs.items())}")

    def cmd_assert_state(self, args):
        if not args:
            raise ScenarioError("assert_state needs at least one k=v check")
        members = sorted(n for n, u in self.users.items() if u.in_group)
        if not members:
            raise ScenarioError("assert_state with nobody in the group")
        ref = self.users[members[0]]
        for tok in args:
            if "=" not in tok:
                raise ScenarioError(f"assert_state expects k=v, got {tok!r}")
            key, want = tok.split("=", 1)
            if key == "epoch":
                got = str(ref.cgka.epoch)
            elif key == "members":
                got = ",".join(members)
            elif key == "reqs":
                got = ",".join(sorted(ref.reqs))
            elif key == "group":
                got = ref.cgka.group_id or ""
            else:
                raise ScenarioError(f"unknown assert_state key {key!r}")
            if got != want:
                raise ScenarioError(f"assert_state {key}: wanted {want!r}, got {got!r}")
        self._say(f"assert_state ok ({' '.join(args)})")

    # -------------------------------------------------------------- driving

    def _check_agreement(self) -> tuple:
        digests = {n: user_digest(u) for n, u in self.users.items() if u.in_group}
        if not digests:
            raise ScenarioError("nobody left in the group")
        values = set(digests.values())
        if len(values) > 1:
            detail = ", ".join(f"{n}:e{d[0]}" for n, d in sorted(digests.items()))
            raise ScenarioError(f"members disagree after delivery ({detail})")
        return values.pop()

    COMMANDS = {
        "init": cmd_init,
        "create": cmd_create,
        "publish": cmd_publish,
        "present": cmd_present,
        "propose": cmd_propose,
        "propose_reqs": cmd_propose_reqs,
        "commit": cmd_commit,
        "process_all": cmd_process_all,
        "assert_replay_rejected": cmd_assert_replay_rejected,
        "expose": cmd_expose,
        "assert_state": cmd_assert_state,
    }

    def run_line(self, line: str, line_no: int | None = None) -> None:
        text = line.split("#", 1)[0].strip()
        if not text:
            return
        tokens = text.split()
        handler = self.COMMANDS.get(tokens[0])
        if handler is None:
            raise ScenarioError(f"unknown command {tokens[0]!r}", line_no)
        try:
            handler(self, tokens[1:])
        except ScenarioError as exc:
            if exc.line_no is None:
                raise ScenarioError(str(exc), line_no) from None
            raise
        except Exception as exc:
            raise ScenarioError(f"{type(exc).__name__}: {exc}", line_no) from exc

    def run_text(self, text: str) -> ScenarioResult:
        for line_no, line in enumerate(text.splitlines(), start=1):
            self.run_line(line, line_no)
        return self.result


def run_scenario(text: str, seed: int = 0, scheme: str = "bbs-style") -> ScenarioResult:
    return ScenarioRunner(seed=seed, scheme=scheme).run_text(text)


def random_scenario(seed: int) -> str:
    """Bounded random group lifecycle as scenario text.

    Every generated script is valid by construction: one commit per step,
    full delivery and a replay check after each, membership and
    requirement bookkeeping mirrored so proposals always apply.
    """
    rng = Rng(seed)
    n_users = rng.randint(3, 6)
    users = [f"u{i}" for i in range(n_users)]
    lines = [f"# generated lifecycle, seed {seed}"]
    for u in users:
        lines.append(f"init {u} campus role=staff name={u}")
    creator = users[0]
    lines.append(f"create {creator} grp r-staff:campus:role=staff")
    in_group = {creator}
    outside = set(users[1:])
    depth = 0
    n_commits = rng.randint(3, 10)
    for _ in range(n_commits):
        ops = ["noop", "update"]
        if outside:
            ops += ["add", "join"]
        if len(in_group) >= 3:
            ops.append("remove")
        ops.append("reqs")
        op = rng.choice(ops)
        if op == "join":
            joiner = rng.choice(sorted(outside))
            member = rng.choice(sorted(in_group))
            lines += [
                f"publish {member}",
                f"present {joiner} {member} join",
                f"propose {joiner} join",
                f"commit {joiner}",
            ]
            in_group.add(joiner)
            outside.discard(joiner)
        else:
            committer = rng.choice(sorted(in_group))
            if op == "add":
                cand = rng.choice(sorted(outside))
                lines += [
                    f"publish {committer}",
                    f"present {cand} {committer} add",
                    f"propose {committer} add {cand}",
                ]
                in_group.add(cand)
                outside.discard(cand)
            elif op == "update":
                lines.append(f"propose {rng.choice(sorted(in_group))} update")
            elif op == "remove":
                target = rng.choice(sorted(in_group - {committer}))
                lines.append(f"propose {committer} remove {target}")
                in_group.discard(target)
                outside.add(target)
            elif op == "reqs":
                if depth > 0 and rng.coin():
                    depth -= 1
                    lines.append(f"propose_reqs {committer} remove rx{depth}")
                else:
                    lines.append(f"propose_reqs {committer} add rx{depth}:campus:role=staff")
                    depth += 1
            lines.append(f"commit {committer}")
        lines += ["process_all", "assert_replay_rejected"]
    reqs = ",".join(["r-staff"] + [f"rx{i}" for i in range(depth)])
    lines.append(
        f"assert_state epoch={n_commits} members={','.join(sorted(in_group))} reqs={reqs}"
    )
    return "\n".join(lines) + "\n"
