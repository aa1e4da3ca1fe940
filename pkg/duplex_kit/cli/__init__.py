from .commands import cli, run_command

__all__ = ["cli", "run_command"]
