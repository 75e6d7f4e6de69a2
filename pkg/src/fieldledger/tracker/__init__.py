"""Experiment tracking: run documents with pinned input snapshots."""

from .runs import RunClosed, RunTracker, TrackerError, UnknownRun

__all__ = ["RunClosed", "RunTracker", "TrackerError", "UnknownRun"]
