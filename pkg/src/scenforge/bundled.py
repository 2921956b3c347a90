"""Access to data files shipped inside the package: toy maps, the
default asset registry, and the hand-picked example programs."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .scene import RoadNetwork, load_map
from .scenic.validator import ModelRegistry, load_registry

_MAPS = ("cross4", "straight")


def _data_dir() -> Path:
    return Path(resources.files("scenforge") / "data")


def bundled_map_path(name: str) -> Path:
    if name not in _MAPS:
        raise ValueError(f"no bundled map named {name!r}; have {', '.join(_MAPS)}")
    return _data_dir() / "maps" / f"{name}.map"


def bundled_map(name: str = "cross4") -> RoadNetwork:
    return load_map(bundled_map_path(name))


def bundled_registry() -> ModelRegistry:
    return load_registry(_data_dir() / "registry.json")


def example_program_paths() -> list[Path]:
    """Bundled example programs, sorted by file name for determinism."""
    directory = _data_dir() / "examples"
    return sorted(directory.glob("*.scenic"))


def example_programs() -> list[tuple[str, str]]:
    """(name, text) pairs for every bundled example program."""
    return [
        (path.stem, path.read_text(encoding="utf-8"))
        for path in example_program_paths()
    ]
