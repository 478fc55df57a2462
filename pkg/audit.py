import re
import logging
from typing import Optional
from config import audit_logger


def sanitize_error_message(error: BaseException) -> str:
    """
    Sanitize error messages before they are printed or logged.
    Strips filesystem paths so reports shared from a sweep box do not leak them.
    """
    error_type = type(error).__name__
    error_msg = str(error)

    # Truncate to keep error objects one line
    if len(error_msg) > 500:
        error_msg = error_msg[:497] + "..."

    sensitive_patterns = [
        r'[A-Za-z]:\\[^\s\'"]+',  # Windows paths
        r'(?<![\w.])/(?:[\w.-]+/)+[\w.-]*',  # POSIX paths
    ]

    for pattern in sensitive_patterns:
        error_msg = re.sub(pattern, '[REDACTED]', error_msg)

    return f"{error_type}: {error_msg}"


def log_audit_event(event_type: str, instances_processed: int,
                    instances_succeeded: int, instances_failed: int,
                    violations: int = 0,
                    error_summary: Optional[str] = None):
    """
    Log the audit trail of a sweep or check run.
    One line per command invocation.
    """
    audit_logger.info(
        f"EventType={event_type} | "
        f"Processed={instances_processed} | "
        f"Succeeded={instances_succeeded} | "
        f"Failed={instances_failed} | "
        f"Violations={violations} | "
        f"Errors={error_summary or 'None'}"
    )
    logging.debug(f"Audit event {event_type} recorded")
