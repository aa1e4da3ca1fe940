from rich.console import Console

# Human-facing summaries; stdout stays free for piping
console = Console(stderr=True, highlight=False)
