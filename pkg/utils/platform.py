"""Platform Utility Module.

This module provides helpers for detecting the current platform, locating
the application's log directory, preparing output locations and choosing a
default worker count.
"""

import logging
import os
import platform
from typing import Literal, Mapping, Optional

logger = logging.getLogger(__name__)

APP_NAME = 'dynlab'

# Platform type definitions
PlatformType = Literal['windows', 'macos', 'linux', 'unknown']


def get_platform() -> PlatformType:
    """Detect the current platform.

    Returns:
        PlatformType: The detected platform type.
    """
    system = platform.system().lower()

    if system in ('windows', 'win32'):
        return 'windows'
    elif system == 'darwin':
        return 'macos'
    elif system == 'linux':
        return 'linux'
    return 'unknown'


def get_logs_dir(environ: Optional[Mapping[str, str]] = None) -> str:
    """Get the platform-specific logs directory for the application.

    Returns:
        str: Path to the logs directory.
    """
    environ = os.environ if environ is None else environ
    platform_type = get_platform()
    home = os.path.expanduser('~')

    if platform_type == 'windows':
        base_dir = environ.get('LOCALAPPDATA') or environ.get('APPDATA') or home
        return os.path.join(base_dir, APP_NAME, 'logs')
    elif platform_type == 'macos':
        return os.path.join(home, 'Library', 'Logs', APP_NAME)
    elif platform_type == 'linux':
        xdg_state_home = environ.get('XDG_STATE_HOME')
        if xdg_state_home:
            return os.path.join(xdg_state_home, APP_NAME, 'logs')
        return os.path.join(home, '.local', 'state', APP_NAME, 'logs')
    return os.path.join(home, f'.{APP_NAME}', 'logs')


def resolve_log_file(name: str) -> str:
    """Place a bare log file name in the logs directory; keep paths as given."""
    if os.path.dirname(name):
        return name
    return os.path.join(get_logs_dir(), name)


def ensure_directory_exists(directory: str) -> None:
    """Ensure that the specified directory exists, creating it if necessary.

    Args:
        directory: The directory path to ensure exists. An empty path means
            the current directory.
    """
    if directory and not os.path.exists(directory):
        os.makedirs(directory, exist_ok=True)
        logger.debug(f"Created directory {directory}")


def ensure_parent_exists(prefix: str) -> None:
    """Create the directory an output prefix such as 'out/run' writes into."""
    ensure_directory_exists(os.path.dirname(prefix))


def available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def cap_workers(requested: int) -> int:
    """Clamp a requested worker count to the CPUs this process may use."""
    available = available_cpus()
    if requested > available:
        logger.warning(f"Requested {requested} workers, only {available} CPU(s) available")
        return available
    return max(1, requested)
