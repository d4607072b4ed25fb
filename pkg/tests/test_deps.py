"""
Checks that the package imports only the standard library and the runtime
dependencies declared in pyproject.toml, and that every declared dependency
is actually used.
"""

import ast
import importlib.util
import re
import sysconfig
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
PACKAGE_DIR = ROOT / "src" / "opgauss"

# Distribution name -> import name, for the runtime dependencies
DECLARED = {"numpy": "numpy", "scipy": "scipy"}


def _declared_in_pyproject():
    """Distribution names listed under [project] dependencies."""
    text = (ROOT / "pyproject.toml").read_text(encoding="utf-8")
    block = re.search(r"^dependencies\s*=\s*\[(.*?)\]", text, re.M | re.S)
    assert block, "pyproject.toml has no dependencies list"
    return {
        re.split(r"[<>=!~\[; ]", item, maxsplit=1)[0].lower()
        for item in re.findall(r'"([^"]+)"', block.group(1))
    }


def _is_stdlib(module_name: str) -> bool:
    found = importlib.util.find_spec(module_name)
    if found is None:
        return False
    if found.origin in (None, "built-in", "frozen"):
        return True
    stdlib = Path(sysconfig.get_paths()["stdlib"]).resolve()
    try:
        Path(found.origin).resolve().relative_to(stdlib)
    except ValueError:
        return False
    return True


def _top_level_imports(py_file: Path):
    tree = ast.parse(py_file.read_text(encoding="utf-8"), filename=str(py_file))
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            names.update(alias.name.split(".")[0] for alias in node.names)
        elif isinstance(node, ast.ImportFrom) and node.module and node.level == 0:
            names.add(node.module.split(".")[0])
    return names


def _package_imports():
    py_files = sorted(PACKAGE_DIR.rglob("*.py"))
    assert py_files
    return {py_file: _top_level_imports(py_file) for py_file in py_files}


def test_declared_dependencies_match_pyproject():
    """The table above and pyproject.toml list the same distributions."""
    assert _declared_in_pyproject() == set(DECLARED)


def test_only_declared_dependencies():
    """Fail if the package imports anything beyond stdlib, numpy and scipy."""
    allowed = {"opgauss", *DECLARED.values()}
    offending = [
        (py_file, mod)
        for py_file, mods in _package_imports().items()
        for mod in sorted(mods)
        if mod not in allowed and not _is_stdlib(mod)
    ]
    assert not offending, "Undeclared dependencies found:\n" + "\n".join(
        f" - {file}: {mod}" for file, mod in offending
    )


def test_every_dependency_is_used():
    """A declared runtime dependency that nothing imports is stale."""
    used = set().union(*_package_imports().values())
    assert set(DECLARED.values()) <= used
