#!/usr/bin/env python3
"""Prints one markdown option table per opgauss command (for README.md)."""

import argparse
import sys

from opgauss.args import get_parser


def _default(action: argparse.Action) -> str:
    if action.default in (None, False, argparse.SUPPRESS):
        return ""
    if action.default is True:
        return "True"
    return f"`{action.default}`"


def option_table(parser: argparse.ArgumentParser) -> str:
    """Flags, help and defaults of one parser, help flag excluded."""
    # pylint: disable=protected-access
    lines = ["| Flag | Description | Default |", "| :--- | :--- | :--- |"]
    for action in parser._actions:
        if not action.option_strings or isinstance(action, argparse._HelpAction):
            continue
        flags = ", ".join(f"`{opt}`" for opt in action.option_strings)
        if action.choices:
            flags += " {" + ",".join(str(c) for c in action.choices) + "}"
        lines.append(f"| {flags} | {action.help or ''} | {_default(action)} |")
    return "\n".join(lines)


def main(commands):
    """Tables for the given commands, or for all of them."""
    # pylint: disable=protected-access
    parser = get_parser()
    subparsers = parser._subparsers._group_actions[0].choices
    sections = [f"### Global options\n\n{option_table(parser)}"]
    for name, sub in subparsers.items():
        if commands and name not in commands:
            continue
        sections.append(f"### `opgauss {name}`\n\n{option_table(sub)}")
    print("\n\n".join(sections))


if __name__ == "__main__":
    main(sys.argv[1:])
