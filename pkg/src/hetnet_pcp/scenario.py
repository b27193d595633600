"""Scenario files: YAML description of a network model plus an optional sweep.

Grammar (all keys lower case)::

    alpha: 4                       # path-loss exponent, > 2
    threshold: 5 dB                # optional default for tiers without one
    users:                         # optional, defaults to case 1
      case: 2                      # 1, 2 or 3
      anchor: 2                    # tier id (cases 2 and 3)
      kernel: {type: matern, radius: 40}     # case 2 only; meters
      size_biased: false           # case 3 only
    tiers:
      - id: 1
        process: ppp
        intensity: 1               # per km^2, or "1e-6 /m2"
        power: 1000
        threshold: 10 dB           # "<x> dB" or "<x> lin"
      - id: 2
        process: pcp
        parent_intensity: 10       # per km^2
        mean_cluster_size: 10
        kernel: {type: thomas, sigma: 20}
        power: 1
    sweep:                         # optional
      parameter: tiers.2.kernel.sigma
      values: [10, 20, 50]
    output: csv                    # csv or json

Distances are meters.  Intensities are per km^2 unless written with an
explicit ``/m2`` or ``/km2`` suffix; thresholds always carry a unit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources

import yaml

from .geometry import (
    PCP, PPP, ConfigurationError, Matern, NetworkModel, Thomas, TierSpec, UserPlacement,
)

__all__ = [
    "Scenario", "Sweep", "ScenarioError", "load_scenario", "parse_scenario", "dump_scenario",
    "apply_parameter", "sweep_paths", "preset_names", "load_preset", "section_v_model",
    "parse_threshold", "parse_intensity", "KM2",
]

KM2 = 1e6  # square meters per square kilometer
OUTPUT_FORMATS = ("csv", "json")


class ScenarioError(ValueError):
    """Invalid scenario; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ValueError("a sweep needs at least one value")


@dataclass(frozen=True)
class Scenario:
    model: NetworkModel
    sweep: Sweep | None = None
    output: str = "csv"
    name: str = "scenario"


# ---------------------------------------------------------------------------
# units

_THRESH = re.compile(r"^\s*([-+0-9.eE]+)\s*(db|lin)\s*$", re.IGNORECASE)
_INTENS = re.compile(r"^\s*([-+0-9.eE]+)\s*/\s*(m2|km2)\s*$", re.IGNORECASE)


def parse_threshold(value) -> float:
    """'7 dB' or '5 lin' to a linear ratio."""
    if isinstance(value, bool) or not isinstance(value, str):
        raise ValueError(f"threshold {value!r} needs a unit: '<x> dB' or '<x> lin'")
    m = _THRESH.match(value)
    if not m:
        raise ValueError(f"cannot read threshold {value!r}; expected '<x> dB' or '<x> lin'")
    x = float(m.group(1))
    return 10.0 ** (x / 10.0) if m.group(2).lower() == "db" else x


def parse_intensity(value) -> float:
    """Number (per km^2) or '<x> /m2' / '<x> /km2' to points per m^2."""
    if isinstance(value, bool):
        raise ValueError("intensity must be a number")
    if isinstance(value, (int, float)):
        return float(value) / KM2
    if isinstance(value, str):
        m = _INTENS.match(value)
        if m:
            x = float(m.group(1))
            return x if m.group(2).lower() == "m2" else x / KM2
    raise ValueError(f"cannot read intensity {value!r}")


def _fmt_threshold(x: float) -> str:
    return f"{x!r} lin"


def _fmt_intensity(x: float) -> str:
    return f"{x!r} /m2"


# ---------------------------------------------------------------------------
# parsing with line numbers

class _Lines:
    """Maps key paths of the parsed document to source lines."""

    def __init__(self, node):
        self.map = {}
        self._walk(node, ())

    def _walk(self, node, path):
        self.map[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = k.value
                self.map[path + (key,)] = k.start_mark.line + 1
                self._walk(v, path + (key,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def __call__(self, *path):
        while path and path not in self.map:
            path = path[:-1]
        return self.map.get(path)


def _kernel(d, where, err):
    if not isinstance(d, dict):
        raise err("kernel must be a mapping with a 'type'", *where)
    kind = str(d.get("type", "")).lower()
    try:
        if kind == "matern":
            _only(d, {"type", "radius"}, where, err)
            return Matern(float(d["radius"]))
        if kind == "thomas":
            _only(d, {"type", "sigma"}, where, err)
            return Thomas(float(d["sigma"]))
    except KeyError as e:
        raise err(f"kernel is missing {e.args[0]!r}", *where) from None
    except (TypeError, ValueError) as e:
        raise err(f"bad kernel: {e}", *where) from None
    raise err(f"unknown kernel type {d.get('type')!r} (use matern or thomas)", *where, "type")


def _only(d, allowed, where, err):
    for k in d:
        if k not in allowed:
            raise err(f"unknown key {k!r}; expected one of {sorted(allowed)}", *where, k)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        loader = yaml.SafeLoader(text)
        try:
            node = loader.get_single_node()
            data = loader.construct_document(node) if node is not None else None
        finally:
            loader.dispose()
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ScenarioError(f"YAML syntax error: {getattr(e, 'problem', e)}",
                            mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a YAML mapping", 1, source)
    lines = _Lines(node)

    def err(msg, *path):
        return ScenarioError(msg, lines(*path), source)

    _only(data, {"alpha", "threshold", "users", "tiers", "sweep", "output", "name"}, (), err)
    try:
        alpha = float(data["alpha"])
    except KeyError:
        raise err("missing 'alpha'") from None
    except (TypeError, ValueError):
        raise err("alpha must be a number", "alpha") from None

    default_beta = None
    if "threshold" in data:
        try:
            default_beta = parse_threshold(data["threshold"])
        except ValueError as e:
            raise err(str(e), "threshold") from None

    raw_tiers = data.get("tiers")
    if not isinstance(raw_tiers, list) or not raw_tiers:
        raise err("'tiers' must be a non-empty list", "tiers")
    tiers = []
    for i, t in enumerate(raw_tiers):
        where = ("tiers", i)
        if not isinstance(t, dict):
            raise err("each tier must be a mapping", *where)
        kind = str(t.get("process", "")).lower()
        common = {"id", "process", "power", "threshold"}
        try:
            if kind == "ppp":
                _only(t, common | {"intensity"}, where, err)
                try:
                    proc = PPP(parse_intensity(t["intensity"]))
                except ValueError as e:
                    raise err(str(e), *where, "intensity") from None
            elif kind == "pcp":
                _only(t, common | {"parent_intensity", "mean_cluster_size", "kernel"}, where, err)
                try:
                    lam_p = parse_intensity(t["parent_intensity"])
                except ValueError as e:
                    raise err(str(e), *where, "parent_intensity") from None
                kern = _kernel(t.get("kernel"), where + ("kernel",), err)
                proc = PCP(lam_p, float(t["mean_cluster_size"]), kern)
            else:
                raise err("process must be 'ppp' or 'pcp'", *where, "process")
            if "threshold" in t:
                try:
                    beta = parse_threshold(t["threshold"])
                except ValueError as e:
                    raise err(str(e), *where, "threshold") from None
            elif default_beta is not None:
                beta = default_beta
            else:
                raise err("tier has no threshold and there is no default 'threshold'", *where)
            tid = t["id"]
            if isinstance(tid, bool) or not isinstance(tid, int):
                raise err("tier id must be an integer", *where, "id")
            tiers.append(TierSpec(tid, proc, float(t["power"]), beta))
        except KeyError as e:
            raise err(f"tier is missing {e.args[0]!r}", *where) from None
        except ScenarioError:
            raise
        except (TypeError, ValueError) as e:
            msg = str(e)
            key = next((k for k in ("power", "threshold", "cluster size", "intensity", "id")
                        if k in msg), None)
            key = {"cluster size": "mean_cluster_size", "intensity": "parent_intensity"}.get(key, key)
            raise err(msg, *where, *(() if key is None else (key,))) from None

    users = UserPlacement()
    if "users" in data:
        u = data["users"]
        if not isinstance(u, dict):
            raise err("'users' must be a mapping", "users")
        _only(u, {"case", "anchor", "kernel", "size_biased"}, ("users",), err)
        kern = _kernel(u["kernel"], ("users", "kernel"), err) if "kernel" in u else None
        try:
            users = UserPlacement(int(u.get("case", 1)), u.get("anchor"), kern,
                                  size_biased=bool(u.get("size_biased", False)))
        except (ConfigurationError, TypeError, ValueError) as e:
            raise err(str(e), "users") from None

    try:
        model = NetworkModel(tuple(tiers), alpha, users)
    except ConfigurationError as e:
        msg = str(e)
        if "anchor" in msg:
            where = ("users", "anchor")
        elif "case" in msg:
            where = ("users",)
        else:
            where = ("tiers",)
        raise err(msg, *where) from None

    sweep = None
    if "sweep" in data:
        s = data["sweep"]
        if not isinstance(s, dict) or "parameter" not in s or "values" not in s:
            raise err("'sweep' needs 'parameter' and 'values'", "sweep")
        _only(s, {"parameter", "values"}, ("sweep",), err)
        if not isinstance(s["values"], list) or not s["values"]:
            raise err("sweep values must be a non-empty list", "sweep", "values")
        sweep = Sweep(str(s["parameter"]), tuple(s["values"]))
        try:
            for v in sweep.values:
                apply_parameter(model, sweep.parameter, v)
        except KeyError as e:
            raise err(_message(e), "sweep", "parameter") from None
        except (ValueError, ConfigurationError) as e:
            raise err(_message(e), "sweep", "values") from None

    output = str(data.get("output", "csv")).lower()
    if output not in OUTPUT_FORMATS:
        raise err(f"output must be one of {OUTPUT_FORMATS}", "output")
    return Scenario(model, sweep, output, str(data.get("name", source)))


def _message(e: Exception) -> str:
    return e.args[0] if isinstance(e, KeyError) and e.args else str(e)


def load_scenario(path: str) -> Scenario:
    """Read a scenario file, or a shipped preset given as ``preset:<name>``."""
    if path.startswith("preset:"):
        return load_preset(path.split(":", 1)[1])
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, source=path)


# ---------------------------------------------------------------------------
# writing

def _kernel_dict(k):
    if isinstance(k, Matern):
        return {"type": "matern", "radius": k.radius}
    return {"type": "thomas", "sigma": k.sigma}


def scenario_dict(sc: Scenario) -> dict:
    m = sc.model
    tiers = []
    for t in m.tiers:
        d = {"id": t.id}
        p = t.process
        if isinstance(p, PPP):
            d.update(process="ppp", intensity=_fmt_intensity(p.intensity))
        else:
            d.update(process="pcp", parent_intensity=_fmt_intensity(p.parent_intensity),
                     mean_cluster_size=p.mean_cluster_size, kernel=_kernel_dict(p.kernel))
        d.update(power=t.power, threshold=_fmt_threshold(t.threshold))
        tiers.append(d)
    out = {"name": sc.name, "alpha": m.alpha}
    u = m.users
    if u.case != 1:
        ud = {"case": u.case, "anchor": u.anchor}
        if u.kernel is not None:
            ud["kernel"] = _kernel_dict(u.kernel)
        if u.size_biased:
            ud["size_biased"] = True
        out["users"] = ud
    out["tiers"] = tiers
    if sc.sweep is not None:
        out["sweep"] = {"parameter": sc.sweep.parameter, "values": list(sc.sweep.values)}
    out["output"] = sc.output
    return out


def dump_scenario(sc: Scenario) -> str:
    """YAML text that ``parse_scenario`` maps back to an equal Scenario."""
    return yaml.safe_dump(scenario_dict(sc), sort_keys=False, default_flow_style=None)


# ---------------------------------------------------------------------------
# parameter paths

def sweep_paths(model: NetworkModel) -> list[str]:
    """Every numeric parameter path accepted by ``apply_parameter``."""
    paths = ["alpha", "threshold", "cluster_scale", "intensity_scale"]
    for t in model.tiers:
        base = f"tiers.{t.id}"
        paths += [f"{base}.power", f"{base}.threshold"]
        p = t.process
        if isinstance(p, PPP):
            paths.append(f"{base}.intensity")
        else:
            paths += [f"{base}.parent_intensity", f"{base}.mean_cluster_size"]
            paths.append(f"{base}.kernel." + ("radius" if isinstance(p.kernel, Matern) else "sigma"))
    if model.users.kernel is not None:
        k = model.users.kernel
        paths.append("users.kernel." + ("radius" if isinstance(k, Matern) else "sigma"))
    return paths


def _threshold_value(v) -> float:
    return parse_threshold(v) if isinstance(v, str) else float(v)


def _intensity_value(v) -> float:
    return parse_intensity(v)


def _set_kernel(k, field_name, value):
    if isinstance(k, Matern) and field_name == "radius":
        return Matern(float(value))
    if isinstance(k, Thomas) and field_name == "sigma":
        return Thomas(float(value))
    raise KeyError(field_name)


def apply_parameter(model: NetworkModel, path: str, value) -> NetworkModel:
    """Return a copy of ``model`` with the parameter at ``path`` set.

    Values use file units: intensities per km^2 (or with a unit suffix),
    thresholds as '<x> dB' / '<x> lin' strings or bare linear numbers,
    distances in meters.  ``cluster_scale`` and ``intensity_scale`` are
    multipliers applied to every kernel / every (parent) intensity.
    """
    valid = sweep_paths(model)
    if path not in valid:
        raise KeyError(f"unknown parameter path {path!r}; valid paths: {', '.join(valid)}")
    parts = path.split(".")
    if path == "alpha":
        return replace(model, alpha=float(value))
    if path == "threshold":
        beta = _threshold_value(value)
        return replace(model, tiers=tuple(replace(t, threshold=beta) for t in model.tiers))
    if path == "cluster_scale":
        return model.scale_clusters(float(value))
    if path == "intensity_scale":
        return model.scale_intensities(float(value))
    if parts[0] == "users":
        u = model.users
        return replace(model, users=replace(u, kernel=_set_kernel(u.kernel, parts[2], value)))
    tid = int(parts[1])
    t = model.tier(tid)
    field_name = parts[2]
    p = t.process
    if field_name == "power":
        return model.replace_tier(tid, power=float(value))
    if field_name == "threshold":
        return model.replace_tier(tid, threshold=_threshold_value(value))
    if field_name == "intensity":
        return model.replace_tier(tid, process=PPP(_intensity_value(value)))
    if field_name == "parent_intensity":
        return model.replace_tier(tid, process=replace(p, parent_intensity=_intensity_value(value)))
    if field_name == "mean_cluster_size":
        return model.replace_tier(tid, process=replace(p, mean_cluster_size=float(value)))
    return model.replace_tier(tid, process=replace(p, kernel=_set_kernel(p.kernel, parts[3], value)))


# ---------------------------------------------------------------------------
# presets

def preset_names() -> list[str]:
    files = resources.files("hetnet_pcp").joinpath("presets").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def load_preset(name: str) -> Scenario:
    names = preset_names()
    if name not in names:
        raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(names)}",
                            source=f"preset:{name}")
    text = resources.files("hetnet_pcp").joinpath("presets", name + ".yaml").read_text("utf-8")
    return parse_scenario(text, source=f"preset:{name}")


def section_v_model(number: int, kernel=None, beta: float = 5.0,
                    mean_cluster_size: float = 10.0, base_intensity: float = 1.0 / KM2,
                    ) -> NetworkModel:
    """The four two-tier reference networks.

    Tier 1: PPP macro cells (intensity ``base_intensity``, power 1000).
    Tier 2: small cells (power 1) with mean intensity 100 x tier 1; a PPP in
    models 1-2 and a PCP with ``mean_cluster_size`` points per cluster in
    models 3-4.  Users: PPP (1, 4), clustered around tier-2 BSs (2), or
    sharing the tier-2 parents (3).  ``kernel`` defaults to a 40 m Matern disc.
    """
    if number not in (1, 2, 3, 4):
        raise ValueError("model number must be 1, 2, 3 or 4")
    kernel = Matern(40.0) if kernel is None else kernel
    macro = TierSpec(1, PPP(base_intensity), 1000.0, beta)
    small_int = 100.0 * base_intensity
    if number in (1, 2):
        small = TierSpec(2, PPP(small_int), 1.0, beta)
    else:
        small = TierSpec(2, PCP(small_int / mean_cluster_size, mean_cluster_size, kernel), 1.0, beta)
    users = {1: UserPlacement.uniform(), 2: UserPlacement.around_ppp(2, kernel),
             3: UserPlacement.with_pcp(2), 4: UserPlacement.uniform()}[number]
    return NetworkModel((macro, small), 4.0, users)
