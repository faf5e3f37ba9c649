"""Access to the example inputs shipped inside the package."""

from importlib import resources


def bundled_path(name: str):
    """Traversable path of a bundled data file.

    Parameters
    ----------
    name : str
        File name inside the package data directory, e.g. ``"motivating.dag"``.

    Returns
    -------
    importlib.resources.abc.Traversable
        Path-like object; ``str()`` gives a filesystem path for normal
        installs.
    """
    return resources.files("mpatools").joinpath("data").joinpath(name)


def bundled_text(name: str) -> str:
    """Content of a bundled data file as text."""
    return bundled_path(name).read_text(encoding="utf-8")
