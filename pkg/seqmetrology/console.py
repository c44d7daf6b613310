"""
Console output for the command line: status lines on stderr, report bodies on stdout
"""

import logging
import sys

import pandas as pd
from tabulate import tabulate

MARKERS = {
    "ok": "✅",
    "fail": "❌",
    "warn": "⚠️ ",
    "table": "📊",
    "analysis": "🔍",
    "saved": "💾",
    "control": "🔧",
    "start": "🚀",
}


def status(message: str, kind: str = "ok") -> None:
    print(f"{MARKERS[kind]} {message}", file=sys.stderr)


def banner(title: str, kind: str = "analysis") -> None:
    print(f"\n{MARKERS[kind]} {title}")
    print("=" * 60)


def line(text: str = "") -> None:
    print(text)


def table(df: pd.DataFrame) -> str:
    return tabulate(df, headers="keys", tablefmt="github", showindex=False, floatfmt=".6g")


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
