import logging
import sys
from collections.abc import Sequence

import structlog

from twistcoh.cli.commands import EXIT_USAGE, run
from twistcoh.config import settings
from twistcoh.core.tracing import setup_tracing

logger = structlog.get_logger()


def configure_logging() -> None:
    """Route structlog to stderr; stdout carries the JSON report only."""
    level = logging.DEBUG if settings.debug else logging.INFO
    renderer: structlog.types.Processor = (
        structlog.processors.JSONRenderer()
        if settings.log_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    logger.debug("starting_up", app=settings.app_name)

    if settings.otlp_enabled:
        setup_tracing()

    report, code, usage = run(argv)
    if code == EXIT_USAGE:
        sys.stderr.write(usage + "\n")
        return code
    if report is not None:
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
