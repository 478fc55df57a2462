"""
Test configuration - console logging at WARNING so sweeps stay quiet.
Import this before any package module: config.py's basicConfig is then a no-op.
"""

import logging

logging.basicConfig(
    level=logging.WARNING,
    format='%(levelname)s [%(module)s] %(message)s',
    handlers=[logging.StreamHandler()]
)

# Ensemble commands emit one audit line per run; only overrides and
# aborted outputs (WARNING and up) are shown while testing
audit_logger = logging.getLogger('audit')
audit_handler = logging.StreamHandler()
audit_handler.setFormatter(logging.Formatter('AUDIT %(levelname)s %(message)s'))
audit_logger.addHandler(audit_handler)
audit_logger.setLevel(logging.WARNING)
audit_logger.propagate = False
