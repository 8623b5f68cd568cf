"""Run configuration files.

INI-style text with a fixed schema; practical units at the boundary
(keV, mT, um, cm, degrees) converted to SI here, once. The parser is
strict: unknown sections or keys, duplicates, and malformed values are
errors that name the file, line and key, because a silently ignored
typo in a field strength is a wrong physics run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

MODES = ("near_field", "far_field", "fringe_only", "ray_trace", "sweep",
         "check_only")
SPINS = ("up", "down", "both")
FORMATS = ("spsl", "pgm")

_REQUIRED_SECTIONS = ("beam", "filter", "grid", "slices", "run")
_SECTIONS: dict[str, tuple[str, ...]] = {
    "beam": ("energy_kev", "ell", "spin", "waist_um", "peak_radius_um"),
    "filter": ("q", "b0_mt", "r0_um", "beta_deg", "core_length_cm",
               "fringe_cm", "compensation_offset", "relativistic_correction"),
    "grid": ("n", "extent_um"),
    "slices": ("count",),
    "spectrum": ("sigma_ev", "samples"),
    "run": ("mode", "override_sampling"),
    "outputs": ("directory", "formats"),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration, all quantities SI except energy_ev."""

    energy_ev: float
    ell: int
    spin: str
    waist: float
    q: int
    b0: float
    r0: float
    beta: float
    core_length: float
    fringe_length: float
    compensation_offset: float
    relativistic_correction: bool
    n: int
    extent: float
    n_slices: int
    sigma_ev: float
    spectrum_samples: int
    mode: str
    override_sampling: bool
    output_dir: str
    formats: tuple[str, ...]

    def as_provenance(self) -> dict:
        """Plain dict echo for the provenance record."""
        payload = asdict(self)
        payload["formats"] = list(self.formats)
        return payload


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def parse_config(text: str, *, source: str = "config") -> RunConfig:
    sections = _split_sections(text, source)
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise ConfigError(f"{source}: missing section: {name}")

    get = _Getter(sections, source)

    energy_kev = get.number("beam", "energy_kev")
    ell = get.integer("beam", "ell", default=1)
    spin = get.choice("beam", "spin", SPINS, default="down")
    waist_um = get.number("beam", "waist_um", default=None)
    peak_um = get.number("beam", "peak_radius_um", default=None)
    if waist_um is not None and peak_um is not None:
        raise ConfigError(f"{source}: give only one of 'waist_um' and"
                          " 'peak_radius_um' in [beam]")
    if waist_um is None and peak_um is None:
        raise ConfigError(f"{source}: one of 'waist_um' or 'peak_radius_um'"
                          " is required in [beam]")
    if waist_um is not None:
        waist = waist_um * 1e-6
    else:
        if ell == 0:
            raise ConfigError(f"{source}: 'peak_radius_um' needs a nonzero"
                              " winding; a flat-top mode peaks on the axis")
        waist = peak_um * 1e-6 / math.sqrt(abs(ell) / 2.0)

    q = get.integer("filter", "q", default=-1)
    b0 = get.number("filter", "b0_mt") * 1e-3
    r0 = get.number("filter", "r0_um") * 1e-6
    beta = math.radians(get.number("filter", "beta_deg", default=90.0))
    core_length = get.number("filter", "core_length_cm") * 1e-2
    fringe_length = get.number("filter", "fringe_cm", default=0.0) * 1e-2
    compensation_offset = get.number("filter", "compensation_offset",
                                     default=0.0)
    relativistic = get.boolean("filter", "relativistic_correction",
                               default=True)

    n = get.integer("grid", "n")
    if n < 1 or n & (n - 1):
        line = get.line("grid", "n")
        nearest = 1 << max(6, round(math.log2(n))) if n > 0 else 64
        raise ConfigError(f"{source}:{line}: grid n must be a power of two"
                          f" (got {n}; nearest is {nearest})")
    extent = get.number("grid", "extent_um") * 1e-6

    n_slices = get.integer("slices", "count", default=20)

    sigma_ev = get.number("spectrum", "sigma_ev", default=0.0)
    samples = get.integer("spectrum", "samples", default=5)

    mode = get.choice("run", "mode", MODES, default="far_field")
    override = get.boolean("run", "override_sampling", default=False)

    output_dir = get.text("outputs", "directory", default="out")
    formats = get.format_list("outputs", "formats", default=FORMATS)

    get.reject_unused()
    return RunConfig(energy_ev=energy_kev * 1e3, ell=ell, spin=spin,
                     waist=waist, q=q, b0=b0, r0=r0, beta=beta,
                     core_length=core_length, fringe_length=fringe_length,
                     compensation_offset=compensation_offset,
                     relativistic_correction=relativistic, n=n, extent=extent,
                     n_slices=n_slices, sigma_ev=sigma_ev,
                     spectrum_samples=samples, mode=mode,
                     override_sampling=override, output_dir=output_dir,
                     formats=formats)


def _split_sections(text: str, source: str) -> dict:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: unterminated section"
                                  " header")
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section"
                                  f" [{name}]")
            if name in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section"
                                  f" [{name}]")
            current = name
            sections[name] = {}
            continue
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SECTIONS[current]:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}' in"
                              f" [{current}]")
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for '{key}'")
        sections[current][key] = (value, lineno)
    return sections


_MISSING = object()


class _Getter:
    """Typed access with file:line error messages and unused-key audit."""

    def __init__(self, sections: dict, source: str) -> None:
        self.sections = sections
        self.source = source
        self.used: set[tuple[str, str]] = set()

    def _fetch(self, section: str, key: str, default):
        entry = self.sections.get(section, {}).get(key)
        if entry is None:
            if default is _MISSING:
                raise ConfigError(f"{self.source}: missing key '{key}' in"
                                  f" [{section}]")
            return None
        self.used.add((section, key))
        return entry

    def line(self, section: str, key: str) -> int:
        return self.sections[section][key][1]

    def _parse(self, section: str, key: str, default, convert, describe: str):
        entry = self._fetch(section, key, default)
        if entry is None:
            return default
        value, lineno = entry
        try:
            return convert(value)
        except ValueError:
            raise ConfigError(f"{self.source}:{lineno}: '{key}' expects"
                              f" {describe}, got '{value}'") from None

    def number(self, section, key, default=_MISSING):
        return self._parse(section, key, default, float, "a number")

    def integer(self, section, key, default=_MISSING):
        return self._parse(section, key, default, _int, "an integer")

    def boolean(self, section, key, default=_MISSING):
        return self._parse(section, key, default, _bool, "true or false")

    def text(self, section, key, default=_MISSING):
        return self._parse(section, key, default, str, "text")

    def choice(self, section, key, options, default=_MISSING):
        return self._parse(section, key, default, _one_of(options),
                           "one of " + ", ".join(options))

    def format_list(self, section, key, default=_MISSING):
        return self._parse(section, key, default, _formats,
                           "a comma list drawn from " + ", ".join(FORMATS))

    def reject_unused(self) -> None:
        for section, body in self.sections.items():
            for key, (_, lineno) in body.items():
                if (section, key) not in self.used:
                    raise ConfigError(f"{self.source}:{lineno}: key '{key}'"
                                      f" is not consumed by [{section}] in"
                                      " this mode")


def _int(value: str) -> int:
    return int(value, 10)


def _bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(value)


def _one_of(options):
    def convert(value: str) -> str:
        lowered = value.lower()
        if lowered not in options:
            raise ValueError(value)
        return lowered
    return convert


def _formats(value: str):
    items = tuple(part.strip().lower() for part in value.split(","))
    if not items or any(item not in FORMATS for item in items):
        raise ValueError(value)
    return items
