"""Built-in example systems, one TOML file per entry, in a fixed order."""

from importlib import resources

from ..sysfile import loads


def _files():
    root = resources.files(__name__)
    return sorted((f for f in root.iterdir() if f.name.endswith(".toml")), key=lambda f: f.name)


def entries():
    """All entries as :class:`SystemFile` objects, in catalog order."""
    return [loads(f.read_text(encoding="utf-8"), f.name) for f in _files()]


def names():
    return [e.name for e in entries()]


def get(name):
    for e in entries():
        if e.name == name:
            return e
    raise KeyError(name)
