"""Bundled circuits and experiment configs."""
from importlib import resources

from ..circuit_ir import Circuit, parse_circuit


def bundled_path(name: str, kind: str = "circuits"):
    suffix = ".circ" if kind == "circuits" else ".ini"
    fname = name if name.endswith(suffix) else name + suffix
    path = resources.files(__name__) / kind / fname
    if not path.is_file():
        raise FileNotFoundError(f"no bundled {kind[:-1]} named {name!r}")
    return path


def bundled_circuit(name: str) -> Circuit:
    return parse_circuit(bundled_path(name).read_text(encoding="utf-8"))


def bundled_names(kind: str = "circuits") -> list[str]:
    folder = resources.files(__name__) / kind
    return sorted(p.name.rsplit(".", 1)[0] for p in folder.iterdir() if p.is_file() and not p.name.startswith("_"))
