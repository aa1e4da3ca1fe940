"""
Command decorators for logging, error mapping and input checks.
"""
import logging
import os
import time
from functools import wraps
from typing import Any, Callable

import click
from marshmallow import ValidationError

from ..constants import ERROR_MESSAGES, EXIT_DATA, EXIT_OK
from ..errors import DuplexError, InputFileError
from ..extensions import console

logger = logging.getLogger(__name__)


def log_command(f: Callable) -> Callable:
    """
    Decorator to log the command, its flags and elapsed time.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        ctx = click.get_current_context()
        start_time = time.perf_counter()
        logger.info(f"Command: {ctx.info_name} {kwargs}")

        result = f(*args, **kwargs)

        duration = time.perf_counter() - start_time
        logger.info(f"Command {ctx.info_name} finished with exit code {result} in {duration:.3f}s")
        return result

    return decorated_function


def handle_errors(f: Callable) -> Callable:
    """
    Decorator mapping data errors to exit codes. Usage errors are raised
    by click before the command runs.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs) -> int:
        try:
            result = f(*args, **kwargs)
        except DuplexError as e:
            logger.error(f"{type(e).__name__}: {e}")
            console.print(f"[red]error:[/red] {e}", markup=True)
            return e.exit_code
        except ValidationError as e:
            logger.error(f"Validation error: {e.messages}")
            console.print(f"[red]error:[/red] {e.messages}", markup=True)
            return EXIT_DATA
        except OSError as e:
            logger.error(f"I/O error: {e}")
            console.print(f"[red]error:[/red] {e}", markup=True)
            return EXIT_DATA
        return EXIT_OK if result is None else result

    return decorated_function


def require_input(*names: str) -> Callable:
    """
    Decorator to ensure the named path options exist before the command runs.
    """
    def decorator(f: Callable) -> Callable:
        @wraps(f)
        def decorated_function(*args, **kwargs) -> Any:
            for name in names:
                path = kwargs.get(name)
                if path is not None and not os.path.exists(path):
                    logger.warning(ERROR_MESSAGES["input_missing"].format(path=path))
                    raise InputFileError(path=path)
            return f(*args, **kwargs)
        return decorated_function
    return decorator
