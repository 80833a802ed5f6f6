"""Walk one group through its whole life.

Three users hold credentials from the same issuer. Alice creates a group
gated on role=staff, invites Bob with a welcome, Carol joins from outside
on her own commit, the admission rule is tightened and relaxed again, and
Bob is removed. After every commit the script prints each member's epoch,
challenge, and epoch-secret fingerprint so you can watch them stay in
lockstep.

Run: python3 demos/group_lifecycle.py
"""

from aacgka import (
    Requirement,
    Rng,
    aa_commit,
    aa_create,
    aa_init,
    aa_present,
    aa_process,
    aa_propose,
    aa_propose_reqs,
    aa_publish_info,
    pki_init,
    secret_fingerprint,
)

rng = Rng(11)
pki = pki_init(["campus"], rng.spawn(0))

alice = aa_init("alice", pki, "campus", {"role": "staff", "dept": "math"}, rng.spawn(1))
bob = aa_init("bob", pki, "campus", {"role": "staff", "dept": "physics"}, rng.spawn(2))
carol = aa_init("carol", pki, "campus", {"role": "staff", "dept": "history"}, rng.spawn(3))

STAFF = Requirement("r-staff", "campus", {"role": "staff"})


def show(label, *users):
    print(f"\n== {label} ==")
    for u in users:
        if not u.in_group:
            print(f"  {u.self_id:6s} outside")
            continue
        fp = secret_fingerprint(u.cgka.epoch_secret).hex()
        print(
            f"  {u.self_id:6s} epoch={u.cgka.epoch}"
            f" chal={u.chal.hex()[:16]} secret={fp[:16]}"
            f" reqs={sorted(u.reqs)}"
        )


alice = aa_create(alice, "reading-room", {"r-staff": STAFF}, rng.spawn(4))
show("alice creates reading-room", alice, bob, carol)

# Bob is invited: he presents against the group's current challenge, alice
# turns the presentation into an add proposal and commits, the welcome
# carries the new epoch secret to him.
gi = aa_publish_info(alice)
pp = aa_present(bob, pki, gi, rng.spawn(5), kind="add")
prop = aa_propose(alice, pki, "bob", "add", rng.spawn(6), pp=pp)
alice, commit = aa_commit(alice, pki, [prop], [], rng.spawn(7))
bob, ok = aa_process(bob, pki, commit)
assert ok
show("bob welcomed in", alice, bob, carol)

# Carol joins without anyone inside lifting a finger: she presents, stages
# the group, proposes her own join, and commits it herself.
gi = aa_publish_info(alice)
pp = aa_present(carol, pki, gi, rng.spawn(8), kind="join")
prop = aa_propose(carol, pki, "carol", "join", rng.spawn(9), pp=pp)
carol, commit = aa_commit(carol, pki, [prop], [], rng.spawn(10))
alice, ok_a = aa_process(alice, pki, commit)
bob, ok_b = aa_process(bob, pki, commit)
assert ok_a and ok_b
show("carol joins from outside", alice, bob, carol)

# Alice tightens admission; bob commits the signed requirement change.
MATH = Requirement("r-math", "campus", {"role": "staff", "dept": "math"})
rp = aa_propose_reqs(alice, "add", "r-math", rng.spawn(11), new_req=MATH)
bob, commit = aa_commit(bob, pki, [], [rp], rng.spawn(12))
alice, _ = aa_process(alice, pki, commit)
carol, _ = aa_process(carol, pki, commit)
show("admission rules now r-math + r-staff", alice, bob, carol)

rp = aa_propose_reqs(carol, "remove", "r-math", rng.spawn(13))
carol, commit = aa_commit(carol, pki, [], [rp], rng.spawn(14))
alice, _ = aa_process(alice, pki, commit)
bob, _ = aa_process(bob, pki, commit)
show("r-math withdrawn again", alice, bob, carol)

prop = aa_propose(alice, pki, "bob", "remove", rng.spawn(15))
alice, commit = aa_commit(alice, pki, [prop], [], rng.spawn(16))
bob, ok_b = aa_process(bob, pki, commit)
carol, ok_c = aa_process(carol, pki, commit)
assert ok_b and ok_c
assert bob.cgka.epoch_secret is None
show("bob removed; his copy of the secret is gone", alice, bob, carol)

same = (
    alice.chal == carol.chal
    and alice.cgka.epoch_secret == carol.cgka.epoch_secret
    and alice.reqs == carol.reqs
)
print(f"\nremaining members agree on everything: {same}")
