from .env import GameEnv
from .games import ADVERSARIES, GAMES, GameResult, run_game

__all__ = ["GameEnv", "GameResult", "run_game", "GAMES", "ADVERSARIES"]
