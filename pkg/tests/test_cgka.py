"""Group key agreement tests.

The key schedule checks recompute epoch secrets from published material
plus one member's private keys, independently of the state the library
returns, so a derivation change cannot hide behind its own output.
"""

import pytest

from aacgka.cgka import (
    KP_ADD,
    KP_JOIN,
    CgkaCommit,
    GroupError,
    Welcome,
    cgka_commit,
    cgka_context,
    cgka_create,
    cgka_genkp,
    cgka_init,
    cgka_process_commit,
    cgka_process_welcome,
    cgka_propose,
    roster_hash,
    secret_fingerprint,
    stage_join,
)
from aacgka.primitives import Rng, kdf, hash_bytes, open_sealed
from aacgka.wire import encode, pack


def make_group(names, seed=1):
    """Group with the given members, plus the states of everyone in it."""
    rng = Rng(seed)
    states = {n: cgka_init(n, rng.spawn(i)) for i, n in enumerate(names)}
    first = names[0]
    states[first] = cgka_create(states[first], "grp", rng.spawn(100))
    for i, name in enumerate(names[1:], start=1):
        kp = cgka_genkp(states[name], KP_ADD, rng.spawn(200 + i))
        prop = cgka_propose(states[first], name, "add", rng.spawn(300 + i), kp=kp)
        new_first, commit, welcome = cgka_commit(states[first], [prop], rng.spawn(400 + i))
        for other in names[1:i]:
            states[other], ok = cgka_process_commit(states[other], commit)
            assert ok
        states[first] = new_first
        states[name], ok = cgka_process_welcome(states[name], welcome)
        assert ok
    return states, rng


def assert_agreement(states, names):
    ref = states[names[0]]
    for n in names[1:]:
        st = states[n]
        assert st.epoch == ref.epoch
        assert st.transcript_hash == ref.transcript_hash
        assert st.epoch_secret == ref.epoch_secret
        assert sorted(st.members) == sorted(ref.members)
        assert cgka_context(st) == cgka_context(ref)


def test_create_basics():
    rng = Rng(3)
    st = cgka_create(cgka_init("a", rng), "room", rng)
    assert st.in_group
    assert st.epoch == 0
    assert list(st.members) == ["a"]
    ctx = cgka_context(st)
    assert ctx.group_id == "room"
    assert ctx.roster_hash == roster_hash(st.members)
    with pytest.raises(GroupError):
        cgka_create(st, "other", rng)


def test_frozen_deterministic_run():
    rng = Rng(7)
    a = cgka_init("alice", rng.spawn(1))
    a = cgka_create(a, "grp", rng.spawn(2))
    assert secret_fingerprint(a.epoch_secret).hex() == "7a125424ce2037b02de9852c1b54df8f"
    a2, commit, welcome = cgka_commit(a, [], rng.spawn(3))
    assert welcome is None
    assert secret_fingerprint(a2.epoch_secret).hex() == "8eadc1d380977c8992baee5b8075ad4f"
    assert a2.transcript_hash.hex() == (
        "25f4cdf3a5abfd069cd4d3b2e0b6479740ce4efa9f634189f93eb4a34363398b"
    )


def test_add_and_welcome_agree():
    states, _ = make_group(["a", "b", "c"])
    assert_agreement(states, ["a", "b", "c"])
    assert states["b"].epoch == 2


def test_epoch_secret_matches_slot_derivation():
    # Independent check: open own sealed slot, rerun the schedule by hand.
    states, rng = make_group(["a", "b"])
    before = states["b"]
    _, commit, _ = cgka_commit(states["a"], [], rng.spawn(900))
    after, ok = cgka_process_commit(before, commit)
    assert ok
    commit_secret = open_sealed(before.esk, commit.slots["b"])
    th = hash_bytes(before.transcript_hash + encode(commit.to_value()))
    expected = kdf(before.epoch_secret, "epoch", pack(commit_secret, th))
    assert after.epoch_secret == expected
    assert after.transcript_hash == th


def test_update_rotates_key_and_keeps_agreement():
    states, rng = make_group(["a", "b", "c"])
    old_epk = states["a"].members["b"].epk
    prop = cgka_propose(states["b"], "b", "update", rng.spawn(500))
    states["a"], commit, _ = cgka_commit(states["a"], [prop], rng.spawn(501))
    for n in ("b", "c"):
        states[n], ok = cgka_process_commit(states[n], commit)
        assert ok
    assert_agreement(states, ["a", "b", "c"])
    assert states["a"].members["b"].epk != old_epk
    # the rotated key must actually work in the next epoch
    states["a"], commit2, _ = cgka_commit(states["a"], [], rng.spawn(502))
    states["b"], ok = cgka_process_commit(states["b"], commit2)
    assert ok


def test_remove_semantics():
    states, rng = make_group(["a", "b", "c"])
    prop = cgka_propose(states["a"], "c", "remove", rng.spawn(600))
    states["a"], commit, _ = cgka_commit(states["a"], [prop], rng.spawn(601))
    states["b"], ok = cgka_process_commit(states["b"], commit)
    assert ok
    states["c"], ok = cgka_process_commit(states["c"], commit)
    assert ok
    assert not states["c"].in_group
    assert states["c"].epoch_secret is None
    assert_agreement(states, ["a", "b"])
    assert "c" not in states["a"].members
    # once out, later commits no longer apply
    states["a"], commit2, _ = cgka_commit(states["a"], [], rng.spawn(602))
    _, ok = cgka_process_commit(states["c"], commit2)
    assert not ok


def test_external_join():
    states, rng = make_group(["a", "b"])
    j = cgka_init("j", rng.spawn(700))
    ctx = cgka_context(states["a"])
    stage_join(j, ctx, states["a"].members)
    kp = cgka_genkp(j, KP_JOIN, rng.spawn(701), ctx=ctx)
    prop = cgka_propose(j, "j", "join", rng.spawn(702), kp=kp)
    j2, commit, welcome = cgka_commit(j, [prop], rng.spawn(703))
    assert welcome is None
    assert commit.external and not commit.slots
    for n in ("a", "b"):
        states[n], ok = cgka_process_commit(states[n], commit)
        assert ok
    states["j"] = j2
    assert_agreement(states, ["a", "b", "j"])
    assert states["a"].members["j"].epk == kp.epk


def test_external_join_secret_derivation():
    # Members recover k through the epoch group key; rerun that path by hand.
    states, rng = make_group(["a", "b"])
    j = cgka_init("j", rng.spawn(710))
    ctx = cgka_context(states["a"])
    stage_join(j, ctx, states["a"].members)
    kp = cgka_genkp(j, KP_JOIN, rng.spawn(711), ctx=ctx)
    prop = cgka_propose(j, "j", "join", rng.spawn(712), kp=kp)
    j2, commit, _ = cgka_commit(j, [prop], rng.spawn(713))

    before = states["a"]
    from aacgka.cgka import _group_kem

    kem = _group_kem(before.group_id, before.epoch, before.epoch_secret)
    assert kem.epk == ctx.group_pk
    k = open_sealed(kem.esk, kp.sealed_k)
    th = hash_bytes(before.transcript_hash + encode(commit.to_value()))
    expected = kdf(k, "ext-epoch", pack(th, before.group_id, before.epoch + 1))
    assert j2.epoch_secret == expected
    after, ok = cgka_process_commit(before, commit)
    assert ok and after.epoch_secret == expected


def test_replay_rejected():
    states, rng = make_group(["a", "b"])
    states["a"], commit, _ = cgka_commit(states["a"], [], rng.spawn(800))
    states["b"], ok = cgka_process_commit(states["b"], commit)
    assert ok
    _, ok = cgka_process_commit(states["b"], commit)
    assert not ok


def test_tampered_commit_rejected():
    states, rng = make_group(["a", "b"])
    _, commit, _ = cgka_commit(states["a"], [], rng.spawn(810))
    bad_slot = dict(commit.slots)
    bad_slot["b"] = bytes([bad_slot["b"][0] ^ 1]) + bad_slot["b"][1:]
    tampered = CgkaCommit(
        commit.group_id, commit.epoch, commit.committer, commit.proposals, bad_slot, False
    )
    _, ok = cgka_process_commit(states["b"], tampered)
    assert not ok
    wrong_group = CgkaCommit(
        "elsewhere", commit.epoch, commit.committer, commit.proposals, commit.slots, False
    )
    _, ok = cgka_process_commit(states["b"], wrong_group)
    assert not ok
    outsider = CgkaCommit(
        commit.group_id, commit.epoch, "mallory", commit.proposals, commit.slots, False
    )
    _, ok = cgka_process_commit(states["b"], outsider)
    assert not ok


def test_commit_slots_cover_roster_exactly():
    states, rng = make_group(["a", "b", "c"])
    d = cgka_init("d", rng.spawn(820))
    kp = cgka_genkp(d, KP_ADD, rng.spawn(821))
    p_add = cgka_propose(states["a"], "d", "add", rng.spawn(822), kp=kp)
    p_rm = cgka_propose(states["a"], "c", "remove", rng.spawn(823))
    _, commit, _ = cgka_commit(states["a"], [p_add, p_rm], rng.spawn(824))
    assert sorted(commit.slots) == ["a", "b", "d"]
    missing = dict(commit.slots)
    del missing["b"]
    short = CgkaCommit(
        commit.group_id, commit.epoch, commit.committer, commit.proposals, missing, False
    )
    _, ok = cgka_process_commit(states["b"], short)
    assert not ok


def test_welcome_misdelivery_rejected():
    states, rng = make_group(["a"])
    b = cgka_init("b", rng.spawn(830))
    kp = cgka_genkp(b, KP_ADD, rng.spawn(831))
    prop = cgka_propose(states["a"], "b", "add", rng.spawn(832), kp=kp)
    _, _, welcome = cgka_commit(states["a"], [prop], rng.spawn(833))
    stranger = cgka_init("z", rng.spawn(834))
    _, ok = cgka_process_welcome(stranger, welcome)
    assert not ok
    bad = Welcome(
        welcome.group_id,
        welcome.epoch,
        welcome.roster,
        welcome.transcript_hash,
        {"b": b"\x00" * len(welcome.sealed["b"])},
    )
    _, ok = cgka_process_welcome(b, bad)
    assert not ok


def test_invalid_commits_raise_for_committer():
    states, rng = make_group(["a", "b"])
    with pytest.raises(GroupError):
        rm_self = cgka_propose(states["a"], "a", "remove", rng.spawn(840))
        cgka_commit(states["a"], [rm_self], rng.spawn(841))
    b_kp = cgka_genkp(cgka_init("x", rng.spawn(842)), KP_ADD, rng.spawn(843))
    with pytest.raises(GroupError):
        cgka_propose(states["a"], "b", "add", rng.spawn(844), kp=b_kp)
    with pytest.raises(GroupError):
        cgka_propose(states["a"], "b", "update", rng.spawn(845))


def test_join_kp_binding_enforced():
    states, rng = make_group(["a", "b"])
    j = cgka_init("j", rng.spawn(850))
    ctx = cgka_context(states["a"])
    stage_join(j, ctx, states["a"].members)
    kp = cgka_genkp(j, KP_JOIN, rng.spawn(851), ctx=ctx)
    prop = cgka_propose(j, "j", "join", rng.spawn(852), kp=kp)
    _, commit, _ = cgka_commit(j, [prop], rng.spawn(853))
    # advance the group first; the join is now bound to a stale epoch
    states["a"], fresh, _ = cgka_commit(states["a"], [], rng.spawn(854))
    _, ok = cgka_process_commit(states["a"], commit)
    assert not ok


def test_stage_join_checks_roster():
    states, rng = make_group(["a", "b"])
    j = cgka_init("j", rng.spawn(860))
    ctx = cgka_context(states["a"])
    wrong = dict(states["a"].members)
    del wrong["b"]
    with pytest.raises(GroupError):
        stage_join(j, ctx, wrong)


def test_randomized_agreement_walk():
    # 25 random commits over a three member core with churn; everyone who can
    # process must land on identical state every step.
    states, rng = make_group(["a", "b", "c"], seed=9)
    names = ["a", "b", "c"]
    next_id = 0
    for step in range(25):
        live = [n for n in names if states[n].in_group]
        committer = rng.choice(sorted(live))
        action = rng.choice(["noop", "update", "add", "remove"])
        props = []
        if action == "update" and committer in live:
            props.append(cgka_propose(states[committer], committer, "update", rng))
        elif action == "add" and len(live) < 6:
            new_name = f"n{next_id}"
            next_id += 1
            st = cgka_init(new_name, rng.spawn(1000 + step))
            kp = cgka_genkp(st, KP_ADD, rng.spawn(1100 + step))
            props.append(cgka_propose(states[committer], new_name, "add", rng, kp=kp))
            states[new_name] = st
            names.append(new_name)
        elif action == "remove" and len(live) > 2:
            target = rng.choice(sorted(n for n in live if n != committer))
            props.append(cgka_propose(states[committer], target, "remove", rng))
        new_state, commit, welcome = cgka_commit(states[committer], props, rng)
        for n in names:
            if n == committer:
                continue
            if states[n].in_group:
                states[n], ok = cgka_process_commit(states[n], commit)
                assert ok or not states[n].in_group
            elif welcome is not None and n in welcome.sealed:
                states[n], ok = cgka_process_welcome(states[n], welcome)
                assert ok
        states[committer] = new_state
        live = [n for n in names if states[n].in_group]
        assert_agreement(states, live)
