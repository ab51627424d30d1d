"""Planar biped locomotion learning: simulator, gait environment, PPO, evaluation."""

__version__ = "0.1.0"
