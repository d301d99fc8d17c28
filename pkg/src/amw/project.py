"""Model projects on disk: loading, canonical reprinting and atomic writes."""

from __future__ import annotations

import fnmatch
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import model as m
from .lexer import tokenize
from .parser import SourceUnit, parse_model, parse_text
from .printer import print_item

SUFFIX = ".amw"
GENERATED_SUFFIX = "_gen.amw"
SKIP_DIRS = {"gen", ".git", "__pycache__"}


@dataclass
class Project:
    root: Path
    units: list = field(default_factory=list)  # SourceUnit, path relative to root
    model: m.Model = None

    def text_of(self, path: str) -> str:
        for u in self.units:
            if u.path == path:
                return u.text
        raise KeyError(path)


def generated_file(chart_owner: str) -> str:
    """Project-relative name of the file holding generated tests for a chart."""
    return f"{chart_owner}{GENERATED_SUFFIX}"


def discover(root: Path) -> list:
    """Relative POSIX paths of all model files under ``root``, sorted."""
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in SKIP_DIRS and not d.startswith("."))
        for f in filenames:
            if f.endswith(SUFFIX):
                found.append(Path(dirpath, f).relative_to(root).as_posix())
    return sorted(found)


def _manifest_filter(root: Path, paths: list) -> tuple:
    """Restrict ``paths`` to a project manifest's globs, if any file declares one."""
    for p in paths:
        text = (root / p).read_text(encoding="utf-8")
        if "project" not in text:
            continue
        try:
            part = parse_text(text, p)
        except Exception:
            continue  # reported when the whole project is parsed
        if part.manifest is not None:
            # generated test files always belong to the project
            keep = [q for q in paths if q == p or q.endswith(GENERATED_SUFFIX)
                    or any(fnmatch.fnmatch(q, g) for g in part.manifest.files)]
            return keep, part.manifest.name
    return paths, None


def load_project(root) -> Project:
    """Parse every model file of a project directory (or a single file)."""
    root = Path(root)
    if root.is_file():
        paths, base = [root.name], root.parent
        name = root.stem
    else:
        base = root
        paths, name = _manifest_filter(root, discover(root))
        name = name or root.resolve().name
    units = [SourceUnit(p, (base / p).read_text(encoding="utf-8")) for p in paths]
    return Project(base, units, parse_model(units, name))


# -- canonical reprint --------------------------------------------------------


def _comment_groups(text: str, item_lines: list) -> tuple:
    """Top-level comment blocks keyed by the start line of the item they precede."""
    tokens, _ = tokenize(text)
    depth_at = {}
    depth, ti = 0, 0
    lines = text.splitlines()
    for lineno in range(1, len(lines) + 2):
        while ti < len(tokens) and tokens[ti].kind != "EOF" and tokens[ti].line < lineno:
            if tokens[ti].is_sym("{"):
                depth += 1
            elif tokens[ti].is_sym("}"):
                depth -= 1
            ti += 1
        depth_at[lineno] = depth
    groups = {}
    starts = sorted(set(item_lines))
    current = []
    si = 0
    for lineno, line in enumerate(lines, 1):
        while si < len(starts) and starts[si] <= lineno:
            if current:
                groups[starts[si]] = current
            current = []
            si += 1
        stripped = line.strip()
        if depth_at.get(lineno, 0) == 0 and stripped.startswith("//"):
            current.append(stripped)
        elif not stripped and current and current[-1] != "":
            current.append("")
    trailing = current
    return groups, trailing


def _render_comments(lines: list) -> str:
    while lines and lines[0] == "":
        lines = lines[1:]
    return "".join(ln + "\n" for ln in lines)


def reprint_file(model: m.Model, path: str, original: str = "") -> str:
    """Canonical text of one file: its items in document order, top-level comments kept."""
    items = [it for it in model.items() if getattr(it, "source", None) == path]
    order = sorted(range(len(items)),
                   key=lambda i: (items[i].pos.line if items[i].pos is not None else float("inf"), i))
    items = [items[i] for i in order]
    lines = [it.pos.line for it in items if it.pos is not None]
    groups, trailing = _comment_groups(original, lines) if original else ({}, [])
    used = set()
    parts = []
    for it in items:
        text = print_item(it)
        line = it.pos.line if it.pos is not None else None
        if line in groups and line not in used:
            used.add(line)
            text = _render_comments(groups[line]) + text
        parts.append(text)
    out = "\n".join(parts)
    tail = _render_comments(trailing)
    if tail.strip():
        out = out + ("\n" if out else "") + tail.rstrip("\n") + "\n"
    return out


def atomic_write(path: Path, text: str):
    """Write via a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def planned_texts(project: Project, model: m.Model) -> dict:
    """New text per file for ``model``; only files whose text changes are listed."""
    out = {}
    for u in project.units:
        new = reprint_file(model, u.path, u.text)
        if new != u.text:
            out[u.path] = new
    return out


def write_model(project: Project, model: m.Model) -> list:
    """Rewrite the files of ``project`` to hold ``model``; returns the changed paths.

    All new texts are computed before anything is written, so a failure
    while printing leaves the project untouched.
    """
    changes = planned_texts(project, model)
    for path, text in changes.items():
        atomic_write(project.root / path, text)
    return sorted(changes)
