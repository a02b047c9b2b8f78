"""TUI components for hicom."""

from .app import ReportBrowser

__all__ = ["ReportBrowser"]
