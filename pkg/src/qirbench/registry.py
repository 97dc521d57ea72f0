"""Memory registry files: a YAML list of memories plus repeater defaults.

See ``data/table_s1.yaml`` for the bundled example and field documentation.
"""

from dataclasses import dataclass, field
from importlib import resources

import yaml

from .core import ValidationError
from .repeater import MemorySpec, RepeaterConfig

CONFIG_FIELDS = {
    "total_length_km": float, "nesting_n": int, "segment_length_km": float,
    "attenuation_length_km": float, "light_speed_km_per_s": float,
    "detection_efficiency": float, "swap_probability": float, "entangle_probability": float,
}
MEMORY_FIELDS = {
    "name": str, "source_kind": str, "storage_efficiency": float, "lifetime_s": float,
    "multiplex_n": int, "mode_count_m": int, "qubit_fidelity": float,
    "pair_probability": float, "fidelity_dim": int,
}
REQUIRED_MEMORY_FIELDS = ("name", "storage_efficiency", "lifetime_s", "multiplex_n",
                          "mode_count_m", "qubit_fidelity")


@dataclass
class RegistryEntry:
    memory: MemorySpec
    line: int
    published_r_qm: float | None = None
    published_r_tau: float | None = None
    tolerance: float = 0.10


@dataclass
class MemoryRegistry:
    defaults: RepeaterConfig = field(default_factory=RepeaterConfig)
    entries: list = field(default_factory=list)


def bundled_registry_path():
    return resources.files("qirbench") / "data" / "table_s1.yaml"


def _coerce(value, kind, where):
    if kind is str:
        return str(value)
    if kind is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{where}: expected an integer, got {value!r}") from None
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: expected a number, got {value!r}") from None
    return v


def _plain(node):
    """Convert a composed YAML node to Python values (keeps scalars as strings when untagged)."""
    return yaml.safe_load(yaml.serialize(node))


def load_registry(path) -> MemoryRegistry:
    """Parse and validate a registry; errors carry ``path:line`` prefixes."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise ValidationError(f"{path}:{line}: YAML syntax error: {exc}") from None
    if root is None:
        return MemoryRegistry()
    if not isinstance(root, yaml.MappingNode):
        raise ValidationError(f"{path}:{root.start_mark.line + 1}: top level must be a mapping")
    top = {k.value: v for k, v in root.value}

    defaults = RepeaterConfig()
    if "defaults" in top:
        node = top["defaults"]
        where = f"{path}:{node.start_mark.line + 1}"
        raw = _plain(node) or {}
        unknown = set(raw) - set(CONFIG_FIELDS)
        if unknown:
            raise ValidationError(f"{where}: unknown defaults field(s) {sorted(unknown)}")
        kwargs = {k: _coerce(v, CONFIG_FIELDS[k], where) for k, v in raw.items()}
        try:
            defaults = RepeaterConfig(**kwargs)
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None

    registry = MemoryRegistry(defaults=defaults)
    mem_node = top.get("memories")
    if mem_node is None:
        return registry
    if not isinstance(mem_node, yaml.SequenceNode):
        raise ValidationError(f"{path}:{mem_node.start_mark.line + 1}: memories must be a list")
    seen = set()
    for item in mem_node.value:
        line = item.start_mark.line + 1
        where = f"{path}:{line}"
        raw = _plain(item)
        if not isinstance(raw, dict):
            raise ValidationError(f"{where}: each memory must be a mapping")
        published = raw.pop("published", None) or {}
        tolerance = _coerce(raw.pop("tolerance", 0.10), float, where)
        unknown = set(raw) - set(MEMORY_FIELDS)
        if unknown:
            raise ValidationError(f"{where}: unknown memory field(s) {sorted(unknown)}")
        missing = [k for k in REQUIRED_MEMORY_FIELDS if k not in raw]
        if missing:
            raise ValidationError(f"{where}: missing field(s) {missing}")
        kwargs = {k: _coerce(v, MEMORY_FIELDS[k], where) for k, v in raw.items()}
        if kwargs["name"] in seen:
            raise ValidationError(f"{where}: duplicate memory name {kwargs['name']!r}")
        seen.add(kwargs["name"])
        try:
            mem = MemorySpec(**kwargs)
        except (ValidationError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from None
        registry.entries.append(RegistryEntry(
            mem, line,
            _coerce(published["r_qm"], float, where) if "r_qm" in published else None,
            _coerce(published["r_tau"], float, where) if "r_tau" in published else None,
            tolerance))
    return registry
