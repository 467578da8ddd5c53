"""Scenario runner with reproducible JSON/CSV reports."""
