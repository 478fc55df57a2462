import logging
import os
from contextlib import contextmanager
from typing import Iterator, TextIO

from audit import sanitize_error_message
from config import audit_logger
from errors import TheoremViolation

STAGING_SUFFIX = ".staging"


def staging_path(path: str) -> str:
    return f"{path}{STAGING_SUFFIX}"


def promote_staging_file(path: str) -> None:
    """
    SAFETY: Atomic replace of the final output by its staging file.
    os.replace is a single rename, so readers see the old file or the new one.
    """
    os.replace(staging_path(path), path)
    logging.info(f"Staging file promoted to {os.path.basename(path)}")


def discard_staging_file(path: str) -> None:
    try:
        os.remove(staging_path(path))
    except FileNotFoundError:
        pass


@contextmanager
def staged_output(path: str) -> Iterator[TextIO]:
    """
    Write an output file through `<path>.staging`.

    Usage:
        with staged_output("sweep.csv") as handle:
            handle.write(...)
        # promoted on success; the final path is never left half-written

    SAFETY: On a theorem violation the staging file is retained for
    inspection and the final path is left untouched. Any other failure
    removes the staging file.
    """
    staged = staging_path(path)
    handle = open(staged, "w", encoding="utf-8", newline="")
    try:
        yield handle
        handle.close()
        promote_staging_file(path)
    except TheoremViolation as e:
        handle.close()
        logging.error(f"Output aborted, staging file retained for inspection: {sanitize_error_message(e)}")
        audit_logger.error(f"OUTPUT ABORTED: {os.path.basename(path)} unchanged, staging retained")
        raise
    except BaseException as e:
        handle.close()
        discard_staging_file(path)
        logging.error(f"Output aborted: {type(e).__name__}")
        raise
