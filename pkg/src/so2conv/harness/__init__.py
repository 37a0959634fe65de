"""CLI, reports and structure input."""
