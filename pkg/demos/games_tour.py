"""Run every security game against every built-in adversary, briefly.

Forgery games (ri, unf, abc-unf, euf-cma) should report zero wins: none
of the replay, tamper, or splice strategies gets a fake presentation or
signature accepted. Distinguishing games (unlink, abc-unlink, kind)
should hover near one half, except sd-hash unlinkability, which the demo
leaves to linkability.py. Trial counts here are small; the acceptance
suite runs the full-size versions.

Run: python3 demos/games_tour.py
"""

from aacgka import run_game
from aacgka.games import ADVERSARIES, GAMES

TRIALS = 30

for game in sorted(GAMES):
    for adversary in sorted(ADVERSARIES[game]):
        res = run_game(game, adversary, TRIALS, seed=3)
        line = f"{game:11s} {adversary:12s} wins {res.wins:3d}/{res.trials}"
        if res.excluded:
            line += f"  (excluded {res.excluded})"
        print(line)
