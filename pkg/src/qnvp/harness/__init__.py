"""Configuration, orchestration, persistence and the command-line interface."""
