from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import structlog

logger = structlog.get_logger()


class EventType(StrEnum):
    RESOLUTION_EXTENDED = "resolution.extended"
    EXT_SPACE_COMPUTED = "ext.space.computed"
    CHAIN_MAP_LIFTED = "chain_map.lifted"
    ISOMORPHISM_FOUND = "isomorphism.found"
    ISOMORPHISM_INCONCLUSIVE = "isomorphism.inconclusive"
    PERIODICITY_CERTIFIED = "periodicity.certified"
    FG_VERDICT = "fg.verdict"
    BAR_SIZE_CAPPED = "bar.size_capped"


@dataclass(frozen=True)
class Event:
    type: EventType
    payload: dict[str, Any] = field(default_factory=dict)
    correlation_id: str | None = None


def emit(event: Event) -> None:
    logger.debug(
        event.type.value.replace(".", "_"),
        correlation_id=event.correlation_id,
        **event.payload,
    )
