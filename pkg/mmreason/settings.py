"""YAML-backed settings and layered merging of configuration dictionaries."""
from collections.abc import MutableMapping
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Iterator, Mapping

import yaml
from deepmerge import Merger  # type: ignore

# later layers win for scalars and lists; dictionaries are merged key by key
settings_merger = Merger(
    [(list, ["override"]), (dict, ["merge"]), (set, ["override"])],
    ["override"],
    ["override"],
)


def merge_settings(
    base: Mapping[str, Any], update: Mapping[str, Any]
) -> Dict[str, Any]:
    """
    Merge two nested dictionaries without modifying either.

    Args:
        base (Mapping[str, Any]): The lower-precedence layer.
        update (Mapping[str, Any]): The higher-precedence layer.

    Returns:
        Dict[str, Any]: A new merged dictionary.
    """
    return settings_merger.merge(deepcopy(dict(base)), deepcopy(dict(update)))


def load_yaml(file: Path) -> Any:
    """
    Load a yaml file, return empty dict if not exists.

    Args:
        file (Path): File to load

    Returns:
        The value in the file, empty dict otherwise.

    """
    if file.exists():
        with file.open("r") as f:
            res = yaml.safe_load(f)
    else:
        res = {}

    return res if res is not None else {}


def save_yaml(obj: Any, file: Path) -> None:
    """
    Save object to yaml file.

    Args:
        obj (Any): The object to save.
        file (Path): Filename to save it into.
    """
    file.parent.mkdir(parents=True, exist_ok=True)
    with file.open("w") as f:
        yaml.safe_dump(obj, f, default_flow_style=False, sort_keys=True)


class ManifestFile(MutableMapping):
    """
    A dictionary stored in a YAML file.

    Every assignment is written through to disk, so a manifest reflects
    the steps of a run that completed even if a later step fails.
    """

    def __init__(self, file: Path):
        self._file = Path(file)
        self._dict: Dict[str, Any] = load_yaml(self._file)

    @property
    def file(self) -> Path:
        return self._file

    def __getitem__(self, key: str) -> Any:
        return self._dict[key]

    def __setitem__(self, key: str, value: Any):
        """Assign key to value, but also save to yaml-file."""
        self._dict[key] = value
        save_yaml(self._dict, self._file)

    def __delitem__(self, key: str):
        del self._dict[key]
        save_yaml(self._dict, self._file)

    def __iter__(self) -> Iterator[str]:
        return self._dict.__iter__()

    def __len__(self) -> int:
        return len(self._dict)

    def merge(self, source: Mapping[str, Any]) -> None:
        """Merge a nested dictionary into the manifest and save once."""
        self._dict = merge_settings(self._dict, source)
        save_yaml(self._dict, self._file)

    @property
    def dict(self) -> Dict[str, Any]:
        return deepcopy(self._dict)
