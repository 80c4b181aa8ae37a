"""Urban itinerary planner.

The heavy lifting lives in the native ``_core`` module; this package adds
dict-returning wrappers.
"""

import json

from . import _core
from ._core import (
    average_margin,
    default_config,
    distance_matrix,
    haversine,
    overlaps,
    recall_rate,
    solve_path_fixed_endpoints,
    solve_tsp_sa,
    stub_embed,
)

__all__ = [
    "PlanError",
    "average_margin",
    "default_config",
    "distance_matrix",
    "haversine",
    "overlaps",
    "plan",
    "recall_rate",
    "solve_path_fixed_endpoints",
    "solve_tsp_sa",
    "stub_embed",
]


class PlanError(RuntimeError):
    """A pipeline stage failed. ``code`` and ``stage`` are stable tokens."""

    def __init__(self, payload):
        super().__init__(payload.get("message", ""))
        self.code = payload.get("code")
        self.stage = payload.get("stage")
        self.diagnostics = payload.get("diagnostics", {})


def plan(request, city, config=None, variant="full", style="", overrides=None):
    """Plan an itinerary and return the response document as a dict.

    ``config`` is an INI path; without one, CITYWALK_CONFIG and the built-in
    defaults apply. ``overrides`` maps "section.key" to a value.
    """
    try:
        text = _core.plan_json(
            request,
            city,
            None if config is None else str(config),
            variant,
            style,
            {k: str(v) for k, v in (overrides or {}).items()},
        )
    except _core.PlanError as exc:
        raise PlanError(json.loads(str(exc))) from None
    return json.loads(text)
