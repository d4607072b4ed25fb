#!/usr/bin/env python3
"""
Generates shell completion scripts for Bash, Zsh, and Tcsh, plus a
README.md with installation instructions and the list of commands.
"""
from pathlib import Path

import shtab

from opgauss.args import get_parser

SHELL_MAP = {
    "bash": "opgauss.bash",
    "zsh": "_opgauss",
    "tcsh": "opgauss.tcsh",
}

ROOT_DIR = Path(__file__).parent.parent
COMPLETIONS_DIR = ROOT_DIR / "completions"

README_TEMPLATE = """# Shell Completions

Auto-generated completion scripts for `opgauss`. Regenerate them with
`python scripts/generate_completions.py` after changing `src/opgauss/args.py`.

Commands covered:

{commands}

## Installation

### Bash

Source the script in your `~/.bashrc`:

```bash
source /path/to/opgauss/completions/{bash_file}
```

### Zsh

Add this directory to your `$fpath` in `~/.zshrc` **before** `compinit` is called:

```zsh
fpath=(/path/to/opgauss/completions $fpath)
autoload -Uz compinit && compinit
```

### Tcsh

Source the script in your `~/.tcshrc` or `~/.cshrc`:

```tcsh
source /path/to/opgauss/completions/{tcsh_file}
```
"""


def force_one_trailing_newline(text):
    """Return input with all trailing newline deleted, and one added"""
    return text.rstrip("\n") + "\n"


def command_lines(parser):
    """One markdown bullet per subcommand, with its help text."""
    # pylint: disable=protected-access
    lines = []
    for action in parser._subparsers._group_actions:
        for choice in action._choices_actions:
            lines.append(f"* `{choice.dest}`: {choice.help}")
    return "\n".join(lines)


def main():
    """Main"""
    print(f"Generating completions in {COMPLETIONS_DIR}...")
    COMPLETIONS_DIR.mkdir(exist_ok=True)
    parser = get_parser()

    for shell, filename in SHELL_MAP.items():
        print(f"  - {shell} -> {filename}")
        content = force_one_trailing_newline(shtab.complete(parser, shell=shell))
        (COMPLETIONS_DIR / filename).write_text(content, encoding="utf-8")

    readme_path = COMPLETIONS_DIR / "README.md"
    print(f"  - Documentation -> {readme_path.name}")
    readme_content = README_TEMPLATE.format(
        commands=command_lines(parser),
        bash_file=SHELL_MAP["bash"],
        tcsh_file=SHELL_MAP["tcsh"],
    )
    readme_path.write_text(force_one_trailing_newline(readme_content), encoding="utf-8")


if __name__ == "__main__":
    main()
