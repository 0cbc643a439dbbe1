"""Objective metrics: MCD, F0 RMSE, semitone accuracy and V/UV error."""
