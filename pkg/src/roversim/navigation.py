"""Dead-reckoning estimator and footprint history.

Heading always comes from the compass; wheel steps only ever contribute
distance. Within one feedback frame the heading update precedes distance
integration, so a turn completed inside the frame is attributed correctly.
The straight-segment model is valid because the drive firmware never
translates and rotates at the same time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .hardware import Pose


class StaleFeedbackError(ValueError):
    """Feedback frame older than one already applied (counter regression)."""


@dataclass
class EstimatedPose:
    pose: Pose
    last_left: int
    last_right: int
    updated_us: int


class PoseEstimator:
    def __init__(self, step_length_m: float, initial_pose: Optional[Pose] = None):
        if step_length_m <= 0:
            raise ValueError("step_length_m must be positive")
        self._step_length_m = step_length_m
        pose = initial_pose.copy() if initial_pose else Pose()
        pose.heading_deg %= 360.0
        self._state = EstimatedPose(pose=pose, last_left=0, last_right=0, updated_us=0)

    def update(self, t_us: int, fb_left: int, fb_right: int, heading_deg: float) -> Pose:
        state = self._state
        if t_us <= state.updated_us:
            raise StaleFeedbackError(
                f"frame at {t_us}us not newer than {state.updated_us}us; reset the session first")
        delta_left = fb_left - state.last_left
        delta_right = fb_right - state.last_right
        state.pose.heading_deg = heading_deg % 360.0
        distance = 0.5 * (delta_left + delta_right) * self._step_length_m
        if distance:
            h = math.radians(state.pose.heading_deg)
            state.pose.x_m += distance * math.sin(h)
            state.pose.y_m += distance * math.cos(h)
        state.last_left = fb_left
        state.last_right = fb_right
        state.updated_us = t_us
        return state.pose.copy()

    def reset_session(self, fb_left: int = 0, fb_right: int = 0) -> None:
        """Re-latch counters after a firmware restart without integrating."""
        self._state.last_left = fb_left
        self._state.last_right = fb_right

    def snapshot(self) -> EstimatedPose:
        state = self._state
        return EstimatedPose(pose=state.pose.copy(), last_left=state.last_left,
                             last_right=state.last_right, updated_us=state.updated_us)


class FootprintTrace:
    """Ring buffer of (t_us, x_m, y_m, heading_deg) with strictly increasing time."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._points: deque[tuple[int, float, float, float]] = deque(maxlen=capacity)

    def record(self, t_us: int, pose: Pose) -> None:
        if self._points and t_us <= self._points[-1][0]:
            raise ValueError(f"footprint timestamps must increase (got {t_us}us)")
        self._points.append((t_us, pose.x_m, pose.y_m, pose.heading_deg))

    def points(self, limit: Optional[int] = None) -> list[tuple[int, float, float, float]]:
        if limit is None or limit >= len(self._points):
            return list(self._points)
        if limit < 1:
            raise ValueError("limit must be >= 1")
        return list(self._points)[-limit:]

    def __len__(self) -> int:
        return len(self._points)
