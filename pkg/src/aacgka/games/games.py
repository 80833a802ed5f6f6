"""Security experiments packaged as repeatable trial runners.

Each game has a challenger that sets up honest parties and a set of named
adversaries that attack them; run_game repeats independent trials under
spawned RNGs and tallies wins. Win conditions exclude trivial victories,
an accepted join bought with an exposed credential, or a signature the
oracle itself produced, and report those exclusions separately so tests
can confirm the bookkeeping fires.

The distinguishing games (unlink, abc-unlink, kind) report a guessing
rate that should pin to one half for the hiding construction; the byte
matching adversary exists precisely to show the salted hash scheme fails
open while the blinded one does not.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from ..cgka import (
    KP_ADD,
    KP_JOIN,
    CgkaCommit,
    KeyPackage,
    Proposal,
    cgka_commit,
    cgka_create,
    cgka_genkp,
    cgka_init,
    cgka_process_commit,
    cgka_process_welcome,
    cgka_propose,
)
from ..credentials import Presentation, abc_prove, abc_verify_proof, pki_init, pki_issue
from ..primitives import (
    Rng,
    gen_sig_keypair,
    hash_bytes,
    kdf,
    sign,
    verify,
)
from ..protocol import (
    AaCommit,
    PresentPackage,
    Requirement,
    UserState,
    aa_commit,
    aa_present,
    aa_propose,
    validate_pp,
)
from ..wire import pack
from .env import GameEnv


class GameRuleError(Exception):
    """An adversary asked the challenger for a disallowed move."""


@dataclass(frozen=True)
class GameResult:
    game: str
    adversary: str
    scheme: str
    trials: int
    wins: int
    excluded: int
    seed: int
    elapsed: float
    transcript_digest: str

    @property
    def win_rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0

    def summary(self) -> str:
        return (
            f"{self.game}/{self.adversary} [{self.scheme}] "
            f"wins {self.wins}/{self.trials} (rate {self.win_rate:.4f}), "
            f"excluded {self.excluded}, seed {self.seed}, {self.elapsed:.1f}s"
        )


def staff_req() -> dict:
    return {"r-staff": Requirement("r-staff", "campus", {"role": "staff"})}


# ---------------------------------------------------------------- helpers

def _content_chunks(value, out: list) -> None:
    # variable material only: structural keys and labels are shared by
    # construction and would swamp any distinguisher with false matches
    if isinstance(value, bytes):
        out.append(value)
    elif isinstance(value, bool):
        pass
    elif isinstance(value, int):
        if value >= 0:
            out.append(value.to_bytes(48, "big"))
    elif isinstance(value, list):
        for item in value:
            _content_chunks(item, out)
    elif isinstance(value, dict):
        for key in sorted(value):
            _content_chunks(value[key], out)


def content_windows(pres: Presentation, size: int = 16) -> set:
    chunks: list = []
    _content_chunks(pres.pi, chunks)
    windows = set()
    for chunk in chunks:
        for i in range(len(chunk) - size + 1):
            windows.add(chunk[i : i + size])
    return windows


def _match_guess(p0: Presentation, p1: Presentation, star: Presentation, rng: Rng) -> int:
    w0, w1, ws = content_windows(p0), content_windows(p1), content_windows(star)
    s0, s1 = len(ws & w0), len(ws & w1)
    if s0 > s1:
        return 0
    if s1 > s0:
        return 1
    return rng.coin()


def _randomized_pi(pi, rng: Rng):
    out = {}
    for key in pi:
        value = pi[key]
        if isinstance(value, bytes):
            out[key] = rng.bytes(len(value))
        elif isinstance(value, int):
            out[key] = int.from_bytes(rng.bytes(31), "big")
        elif isinstance(value, dict):
            out[key] = {k: int.from_bytes(rng.bytes(31), "big") for k in value}
        elif isinstance(value, list):
            out[key] = list(value)
        else:
            out[key] = value
    return out


# ------------------------------------------------- membership impersonation

def _ri_setup(rng: Rng, scheme: str):
    env = GameEnv(rng.spawn(0), scheme)
    env.Q_Init("alice", "campus", {"role": "staff", "name": "alice"})
    env.Q_Init("cand", "campus", {"role": "staff", "name": "cand"})
    env.Q_Init("adv", "campus", {"role": "visitor", "name": "adv"})
    env.Q_Create("alice", "grp", staff_req())
    return env


def ri_trial(rng: Rng, adversary, scheme: str):
    """Can anyone pass presentation validation at the current challenge
    without freshly holding a qualifying credential? The adversary sees a
    qualified candidate's presentation from the previous epoch."""
    env = _ri_setup(rng, scheme)
    gi0 = env.Q_PublishInfo("alice")
    observed = env.Q_Present("cand", gi0, KP_JOIN)
    env.Q_Commit("alice")
    gi1 = env.Q_PublishInfo("alice")
    pp_star = adversary(env, gi1, observed, rng.spawn(1))
    if pp_star is None:
        return False, False
    alice = env.users["alice"]
    ok = validate_pp(
        env.pki,
        gi1.chal,
        alice.reqs,
        gi1.ctx.group_id,
        gi1.ctx.epoch,
        pp_star,
        pp_star.kp.kp_type,
    )
    return bool(ok), False


def ri_adv_replay(env, gi, observed, rng):
    return observed


def ri_adv_forge(env, gi, observed, rng):
    # right shape, fresh keys, random proof material
    sig_kp = gen_sig_keypair(rng)
    header = pack("present", gi.chal, sig_kp.spk)
    pres = Presentation(
        header=header,
        disc_attrs=dict(observed.pres.disc_attrs),
        issuer_id=observed.pres.issuer_id,
        pi=_randomized_pi(observed.pres.pi, rng),
    )
    unsigned = KeyPackage(
        KP_JOIN, sig_kp.spk, rng.bytes(32), b"", rng.bytes(80), gi.ctx.group_id, gi.ctx.epoch
    )
    kp = KeyPackage(
        KP_JOIN,
        sig_kp.spk,
        unsigned.epk,
        sign(sig_kp.ssk, unsigned.tbs()),
        unsigned.sealed_k,
        gi.ctx.group_id,
        gi.ctx.epoch,
    )
    return PresentPackage(pres=pres, kp=kp)


# ------------------------------------------------- membership forgery

def unf_trial(rng: Rng, adversary, scheme: str):
    """Can an attacker get an honest member to accept a joining commit
    without a fresh qualified presentation of an unexposed credential?"""
    env = _ri_setup(rng, scheme)
    gi = env.Q_PublishInfo("alice")
    observed = env.Q_Present("cand", gi, KP_JOIN)
    attack, cred_owner = adversary(env, gi, observed, rng.spawn(1))
    if attack is None:
        return False, False
    accepted = env.Q_Process("alice", attack)
    excluded = bool(accepted) and cred_owner in env.exposed
    return bool(accepted) and not excluded, excluded


def _forged_join_commit(gi, prop: Proposal, snapshot, committer: str, ssk) -> AaCommit:
    basic = CgkaCommit(
        group_id=gi.ctx.group_id,
        epoch=gi.ctx.epoch,
        committer=committer,
        proposals=(prop,),
        slots={},
        external=True,
    )
    unsigned = AaCommit(committer, basic, (), None, snapshot, b"")
    return AaCommit(committer, basic, (), None, snapshot, sign(ssk, unsigned.tbs(gi.chal)))


def unf_adv_pp_copy(env, gi, observed, rng):
    # reuse the candidate's full presentation package, sign the commit
    # with a key the adversary actually has
    adv_sig = gen_sig_keypair(rng)
    prop = Proposal(
        ptype="join",
        proposer="cand",
        target="cand",
        group_id=gi.ctx.group_id,
        epoch=gi.ctx.epoch,
        kp=observed.kp,
        ext={"pres": observed.pres.to_value()},
    )
    return _forged_join_commit(gi, prop, dict(gi.reqs), "cand", adv_sig.ssk), None


def unf_adv_kp_tamper(env, gi, observed, rng):
    # swap the key package's KEM key for one the adversary controls
    adv_sig = gen_sig_keypair(rng)
    kp = observed.kp
    tampered = KeyPackage(
        kp.kp_type, kp.spk, rng.bytes(32), kp.sig, kp.sealed_k, kp.group_id, kp.epoch
    )
    prop = Proposal(
        ptype="join",
        proposer="cand",
        target="cand",
        group_id=gi.ctx.group_id,
        epoch=gi.ctx.epoch,
        kp=tampered,
        ext={"pres": observed.pres.to_value()},
    )
    return _forged_join_commit(gi, prop, dict(gi.reqs), "cand", adv_sig.ssk), None


def unf_adv_splice(env, gi, observed, rng):
    # candidate's presentation stapled to the adversary's own key package
    scratch = cgka_init("adv", rng)
    kp = cgka_genkp(scratch, KP_JOIN, rng, ctx=gi.ctx)
    prop = Proposal(
        ptype="join",
        proposer="adv",
        target="adv",
        group_id=gi.ctx.group_id,
        epoch=gi.ctx.epoch,
        kp=kp,
        ext={"pres": observed.pres.to_value()},
    )
    return _forged_join_commit(gi, prop, dict(gi.reqs), "adv", scratch.ssk), "cand"


def unf_adv_exposed(env, gi, observed, rng):
    # with a leaked credential the whole honest flow goes through; the win
    # must then be excluded, which is exactly what this adversary checks
    cred = env.Q_ExposeCred("cand")
    eve = UserState(self_id="eve", cred=cred, cgka=cgka_init("eve", rng.spawn(0)))
    pp = aa_present(eve, env.pki, gi, rng.spawn(1), kind=KP_JOIN)
    prop = aa_propose(eve, env.pki, "eve", "join", rng.spawn(2), pp=pp)
    eve, commit = aa_commit(eve, env.pki, [prop], [], rng.spawn(3))
    return commit, "cand"


# ------------------------------------------------- presentation unlinkability

def unlink_trial(rng: Rng, adversary, scheme: str):
    """Two same-shaped holders, labeled reference presentations from each,
    then a challenge presentation by a coin-flipped holder in a different
    group. Guessing the holder from bytes should be a coin toss."""
    env = GameEnv(rng.spawn(0), scheme)
    env.Q_Init("alice", "campus", {"role": "staff", "name": "alice"})
    env.Q_Init("bob", "campus", {"role": "staff", "name": "bob"})
    env.Q_Init("h0", "campus", {"role": "staff", "name": "h0", "dept": "ops"})
    env.Q_Init("h1", "campus", {"role": "staff", "name": "h1", "dept": "lab"})
    env.Q_Create("alice", "gA", staff_req())
    env.Q_Create("bob", "gB", staff_req())

    p0 = env.Q_Present("h0", env.Q_PublishInfo("alice"), KP_ADD).pres
    env.Q_Commit("alice")
    p1 = env.Q_Present("h1", env.Q_PublishInfo("alice"), KP_ADD).pres

    b = rng.coin()
    star = env.Q_Present("h0" if b == 0 else "h1", env.Q_PublishInfo("bob"), KP_ADD).pres
    guess = adversary(p0, p1, star, rng.spawn(1))
    return guess == b, False


def unlink_adv_bytes(p0, p1, star, rng):
    return _match_guess(p0, p1, star, rng)


# ------------------------------------------------- credential layer games

def abc_unf_trial(rng: Rng, adversary, scheme: str):
    """Proof forgery for a fresh header, given one honest proof."""
    pki = pki_init(["campus"], rng.spawn(0), scheme=scheme)
    ipk, _ = pki.issuers["campus"]
    _, cred = pki_issue(pki, "campus", {"role": "staff", "name": "anna", "dept": "ops"}, rng.spawn(1))
    header0 = rng.bytes(32)
    p0 = abc_prove(ipk, cred, {"role": "staff"}, header0, rng.spawn(2))
    header1 = rng.bytes(32)
    forged = adversary(ipk, p0, header0, header1, rng.spawn(3))
    if forged is None:
        return False, False
    return bool(abc_verify_proof(ipk, forged, header1)), False


def abc_unf_adv_replay(ipk, p0, header0, header1, rng):
    return Presentation(header1, p0.disc_attrs, p0.issuer_id, p0.pi)


def abc_unf_adv_tamper(ipk, p0, header0, header1, rng):
    pi = dict(p0.pi)
    keys = sorted(k for k in pi if isinstance(pi[k], (bytes, int)))
    k = rng.choice(keys)
    if isinstance(pi[k], bytes):
        flip = rng.randint(0, len(pi[k]) - 1)
        pi[k] = pi[k][:flip] + bytes([pi[k][flip] ^ 1]) + pi[k][flip + 1 :]
    else:
        pi[k] = pi[k] ^ (1 << rng.randint(0, 200))
    return Presentation(header1, p0.disc_attrs, p0.issuer_id, pi)


def abc_unf_adv_randomize(ipk, p0, header0, header1, rng):
    return Presentation(header1, p0.disc_attrs, p0.issuer_id, _randomized_pi(p0.pi, rng))


def abc_unlink_trial(rng: Rng, adversary, scheme: str):
    """Unlinkability at the raw credential layer, fresh headers each time."""
    pki = pki_init(["campus"], rng.spawn(0), scheme=scheme)
    ipk, _ = pki.issuers["campus"]
    _, c0 = pki_issue(pki, "campus", {"role": "staff", "name": "u0", "dept": "ops"}, rng.spawn(1))
    _, c1 = pki_issue(pki, "campus", {"role": "staff", "name": "u1", "dept": "lab"}, rng.spawn(2))
    p0 = abc_prove(ipk, c0, {"role": "staff"}, rng.bytes(32), rng.spawn(3))
    p1 = abc_prove(ipk, c1, {"role": "staff"}, rng.bytes(32), rng.spawn(4))
    b = rng.coin()
    star = abc_prove(ipk, c0 if b == 0 else c1, {"role": "staff"}, rng.bytes(32), rng.spawn(5))
    guess = adversary(p0, p1, star, rng.spawn(6))
    return guess == b, False


# ------------------------------------------------- signature scheme game

def euf_trial(rng: Rng, adversary, scheme: str):
    kp = gen_sig_keypair(rng.spawn(0))
    queried = []

    def sign_oracle(msg: bytes) -> bytes:
        queried.append(msg)
        return sign(kp.ssk, msg)

    msg, sig = adversary(kp.spk, sign_oracle, rng.spawn(1))
    valid = verify(kp.spk, msg, sig)
    fresh = msg not in queried
    return valid and fresh, valid and not fresh


def euf_adv_random(spk, sign_oracle, rng):
    sign_oracle(b"warmup-" + rng.bytes(8))
    return b"forged-" + rng.bytes(16), rng.bytes(64)


def euf_adv_bitflip(spk, sign_oracle, rng):
    msg = b"query-" + rng.bytes(16)
    sig = sign_oracle(msg)
    flip = rng.randint(0, 63)
    bad = sig[:flip] + bytes([sig[flip] ^ (1 << rng.randint(0, 7))]) + sig[flip + 1 :]
    return b"other-" + rng.bytes(16), bad


def euf_adv_replay(spk, sign_oracle, rng):
    # valid but non-fresh; lands in the excluded column, never the wins
    msg = b"query-" + rng.bytes(16)
    return msg, sign_oracle(msg)


# ------------------------------------------------- key indistinguishability

class KindChallenger:
    """Key indistinguishability for the group key schedule.

    The adversary steps the group, may reveal old epoch secrets, then asks
    for the challenge: the current application key or uniform randomness.
    Revealing a challenged epoch, or challenging a revealed one, is
    refused, in either order.
    """

    def __init__(self, rng: Rng, members: int = 3):
        self._rng = rng
        names = [f"m{i}" for i in range(members)]
        states = {}
        for i, n in enumerate(names):
            states[n] = cgka_init(n, rng.spawn(1000 + i))
        states[names[0]] = cgka_create(states[names[0]], "kig", rng.spawn(1100))
        for i, n in enumerate(names[1:], start=1):
            kp = cgka_genkp(states[n], KP_ADD, rng.spawn(1200 + i))
            prop = cgka_propose(states[names[0]], n, "add", rng.spawn(1300 + i), kp=kp)
            states[names[0]], commit, welcome = cgka_commit(
                states[names[0]], [prop], rng.spawn(1400 + i)
            )
            for other in names[1:i]:
                states[other], ok = cgka_process_commit(states[other], commit)
                assert ok
            states[n], ok = cgka_process_welcome(states[n], welcome)
            assert ok
        self._states = states
        self._names = names
        self._history = {states[names[0]].epoch: states[names[0]].epoch_secret}
        self._revealed = set()
        self._challenged = None
        self.b = None

    @property
    def current_epoch(self) -> int:
        return self._states[self._names[0]].epoch

    def step(self) -> None:
        """One commit by a random member, processed by everyone."""
        committer = self._rng.choice(self._names)
        props = []
        if self._rng.coin():
            props.append(cgka_propose(self._states[committer], committer, "update", self._rng))
        new_state, commit, _ = cgka_commit(self._states[committer], props, self._rng)
        for n in self._names:
            if n != committer:
                self._states[n], ok = cgka_process_commit(self._states[n], commit)
                assert ok
        self._states[committer] = new_state
        self._history[new_state.epoch] = new_state.epoch_secret

    def reveal(self, epoch: int) -> bytes:
        if epoch == self._challenged:
            raise GameRuleError("refusing to reveal the challenged epoch")
        if epoch not in self._history:
            raise GameRuleError(f"no secret recorded for epoch {epoch}")
        self._revealed.add(epoch)
        return self._history[epoch]

    def challenge(self) -> bytes:
        if self._challenged is not None:
            raise GameRuleError("challenge already issued")
        epoch = self.current_epoch
        if epoch in self._revealed:
            raise GameRuleError("refusing to challenge a revealed epoch")
        self._challenged = epoch
        self.b = self._rng.coin()
        state = self._states[self._names[0]]
        if self.b == 0:
            return kdf(state.epoch_secret, "app", pack(state.group_id, epoch))
        return self._rng.bytes(32)


def kind_trial(rng: Rng, adversary, scheme: str):
    ch = KindChallenger(rng.spawn(0), members=2)
    for _ in range(rng.randint(0, 2)):
        ch.step()
    guess = adversary(ch, rng.spawn(1))
    if ch.b is None:
        raise GameRuleError("adversary never asked for the challenge")
    return guess == ch.b, False


def kind_adv_coin(ch: KindChallenger, rng: Rng):
    ch.challenge()
    return rng.coin()


def kind_adv_probe(ch: KindChallenger, rng: Rng):
    # exercise the bookkeeping: reveal-then-challenge must be refused,
    # then after stepping past the revealed epoch, challenge-then-reveal
    # must be refused too
    revealed_epoch = ch.current_epoch
    ch.reveal(revealed_epoch)
    try:
        ch.challenge()
    except GameRuleError:
        pass
    else:
        raise AssertionError("challenge after reveal was allowed")
    ch.step()
    key = ch.challenge()
    assert len(key) == 32
    try:
        ch.reveal(ch.current_epoch)
    except GameRuleError:
        pass
    else:
        raise AssertionError("reveal after challenge was allowed")
    return rng.coin()


# ------------------------------------------------- registry and runner

GAMES = {
    "ri": ri_trial,
    "unf": unf_trial,
    "unlink": unlink_trial,
    "abc-unf": abc_unf_trial,
    "abc-unlink": abc_unlink_trial,
    "euf-cma": euf_trial,
    "kind": kind_trial,
}

ADVERSARIES = {
    "ri": {"replay": ri_adv_replay, "forge": ri_adv_forge},
    "unf": {
        "pp-copy": unf_adv_pp_copy,
        "kp-tamper": unf_adv_kp_tamper,
        "splice": unf_adv_splice,
        "exposed": unf_adv_exposed,
    },
    "unlink": {"bytes-match": unlink_adv_bytes},
    "abc-unf": {
        "replay": abc_unf_adv_replay,
        "tamper": abc_unf_adv_tamper,
        "randomize": abc_unf_adv_randomize,
    },
    "abc-unlink": {"bytes-match": _match_guess},
    "euf-cma": {
        "random": euf_adv_random,
        "bitflip": euf_adv_bitflip,
        "replay": euf_adv_replay,
    },
    "kind": {"coin": kind_adv_coin, "probe": kind_adv_probe},
}


def run_game(
    game: str, adversary: str, trials: int, seed: int, scheme: str = "bbs-style"
) -> GameResult:
    if game not in GAMES:
        raise ValueError(f"unknown game {game!r}; choose from {sorted(GAMES)}")
    if adversary not in ADVERSARIES[game]:
        raise ValueError(
            f"unknown adversary {adversary!r} for {game}; choose from {sorted(ADVERSARIES[game])}"
        )
    trial_fn = GAMES[game]
    adv_fn = ADVERSARIES[game][adversary]
    root = Rng(seed)
    wins = excluded = 0
    outcomes = bytearray()
    start = time.perf_counter()
    for i in range(trials):
        win, excl = trial_fn(root.spawn(i), adv_fn, scheme)
        if win:
            wins += 1
        if excl:
            excluded += 1
        outcomes.append(2 if excl else (1 if win else 0))
    elapsed = time.perf_counter() - start
    digest = hash_bytes(pack(game, adversary, scheme, seed, bytes(outcomes))).hex()[:16]
    return GameResult(
        game=game,
        adversary=adversary,
        scheme=scheme,
        trials=trials,
        wins=wins,
        excluded=excluded,
        seed=seed,
        elapsed=elapsed,
        transcript_digest=digest,
    )
