"""Adaptive three-phase screening/optimization design engine.

Submodules: numkit (regression kernel and RNG), designs, screening, augment,
gp, optimize, session, bench, figures, cli, service.
"""

from .session import SessionConfig, SessionState, create_session

__all__ = ["SessionConfig", "SessionState", "create_session"]
__version__ = "0.1.0"
