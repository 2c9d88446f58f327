"""Manage 'id' directories. Each run directory is named by a zero padded
integer, which serves as a filesystem primary key under the output root."""

import os
from pathlib import Path
from typing import Any, Callable, Iterable, List, Tuple

ID_DIGITS = 7
ID_FMT = '{id:0{digits}d}'

# How many times to retry when another process takes the id we picked.
CREATE_RETRIES = 50


def make_id_path(base_path: Path, id_: int) -> Path:
    """The full path to an id directory given its base path and id."""

    return Path(base_path) / (ID_FMT.format(id=id_, digits=ID_DIGITS))


def _existing_ids(id_dir: Path) -> List[int]:
    return sorted(int(name) for name in os.listdir(str(id_dir))
                  if name.isdigit())


def create_id_dir(id_dir: Path) -> Tuple[int, Path]:
    """In the given directory, create the next numbered directory after the
    highest existing one. ``mkdir`` is atomic, so two processes racing for
    the same id see one success and one FileExistsError; the loser moves on
    to the next id.

:param Path id_dir: Path to the directory that contains these 'id'
    directories. Created if missing.
:returns: The id and path to the created directory.
:raises OSError: on directory creation failure.
"""

    id_dir = Path(id_dir)
    id_dir.mkdir(parents=True, exist_ok=True)

    ids = _existing_ids(id_dir)
    next_id = ids[-1] + 1 if ids else 1

    for _ in range(CREATE_RETRIES):
        path = make_id_path(id_dir, next_id)
        try:
            path.mkdir()
        except FileExistsError:
            next_id += 1
            continue
        return next_id, path

    raise OSError("Could not allocate a run id under '{}' after {} tries."
                  .format(id_dir, CREATE_RETRIES))


def default_filter(_: Path) -> bool:
    """Pass every path."""

    return True


def select(id_dir: Path,
           filter_func: Callable[[Any], bool] = default_filter,
           transform: Callable[[Path], Any] = lambda v: v,
           order_func: Callable[[Any], Any] = None,
           order_asc: bool = True,
           limit: int = None) -> List[Any]:
    """Select from the id directories under id_dir. Arguments are as per
    select_from."""

    id_dir = Path(id_dir)
    if not id_dir.exists():
        return []

    return select_from(
        paths=id_dir.iterdir(),
        transform=transform,
        filter_func=filter_func,
        order_func=order_func,
        order_asc=order_asc,
        limit=limit,
    )


def select_from(paths: Iterable[Path],
                filter_func: Callable[[Any], bool] = default_filter,
                transform: Callable[[Path], Any] = lambda v: v,
                order_func: Callable[[Any], Any] = None,
                order_asc: bool = True,
                limit: int = None) -> List[Any]:
    """Return the id directories among paths, filtered, ordered, and
    potentially limited.

    :param paths: Paths to filter, order, and limit. Anything that isn't an
        id directory is ignored.
    :param transform: Applied to each path before filtering or ordering.
        Paths for which it raises ValueError are dropped.
    :param filter_func: True -> include, False -> exclude.
    :param order_func: A sort key. Items for which this returns None are
        removed.
    :param order_asc: Whether to sort in ascending or descending order.
    :param limit: The max items to return. None denotes return all.
    """

    items = []
    for path in paths:
        if not (path.name.isdigit() and path.is_dir()):
            continue

        try:
            item = transform(path)
        except ValueError:
            continue

        if not filter_func(item):
            continue

        if order_func is not None and order_func(item) is None:
            continue

        items.append(item)

    if order_func is not None:
        items.sort(key=order_func, reverse=not order_asc)

    return items[:limit]


def paths_to_ids(paths: List[Path]) -> List[int]:
    """Convert a list of dir_db paths to ids.

    :raises ValueError: For invalid paths
    """

    ids = []
    for path in paths:
        try:
            ids.append(int(path.name))
        except ValueError:
            raise ValueError(
                "Invalid dir_db path '{}'".format(path.as_posix()))
    return ids
