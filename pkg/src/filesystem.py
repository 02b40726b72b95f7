"""Path helpers and atomic file writes for corpora, checkpoints and reports."""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path


@dataclass
class PathInfo:
    """What sits at a user-supplied path."""

    path: str
    exists: bool
    is_directory: bool | None = None  # unknown when nothing exists there
    size: int | None = None  # bytes, regular files only


def expand_path(path: str) -> str:
    """Resolve ~ and $VARS so config files can name locations portably."""
    return os.path.expanduser(os.path.expandvars(path))


def check_path(path: str) -> PathInfo:
    """Describe a path after expansion without raising."""
    expanded = expand_path(path)
    target = Path(expanded)
    if not target.exists():
        return PathInfo(path=expanded, exists=False)
    if target.is_dir():
        return PathInfo(path=expanded, exists=True, is_directory=True)
    return PathInfo(path=expanded, exists=True, is_directory=False, size=target.stat().st_size)


def require_file(path: str) -> Path:
    """Return the expanded path of an existing regular file or raise FileNotFoundError."""
    info = check_path(path)
    if not info.exists or info.is_directory:
        raise FileNotFoundError(f"File not found: {info.path}")
    return Path(info.path)


def ensure_directory(path: str) -> Path:
    """Create a directory (and parents) if needed."""
    info = check_path(path)
    if info.exists and not info.is_directory:
        raise NotADirectoryError(f"Path is not a directory: {info.path}")
    directory = Path(info.path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def atomic_write_text(path: str | Path, content: str) -> Path:
    """Write text via a temp file in the same directory, then rename over the target."""
    target = Path(expand_path(str(path)))
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return target
