"""Stability analysis for retarded functional differential equations.

Segments, systems, simulation and norms come straight from the compiled
core. The property checks, KL envelopes and Lyapunov conditions take the
same configuration dictionaries as the ``delaystab`` command line tool and
return its JSON outputs as dictionaries.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping

from . import _core
from ._core import (
    ConfigError,
    EscapeError,
    NormOptions,
    Segment,
    System,
    Trajectory,
    hoelder_seminorm,
    lp_deriv_norm,
    max_abs_deriv,
    prolong,
    registered_systems,
    simulate,
    sup_norm,
)

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "EscapeError",
    "NormOptions",
    "Segment",
    "System",
    "Trajectory",
    "check",
    "dini_derivative",
    "envelope",
    "functional_value",
    "hoelder_seminorm",
    "lp_deriv_norm",
    "lyapunov",
    "make_system",
    "max_abs_deriv",
    "norms",
    "prolong",
    "registered_systems",
    "run",
    "sample",
    "simulate",
    "space_norm",
    "sup_norm",
]

# process exit codes of the command line tool
EXIT_OK, EXIT_ERROR, EXIT_ESCAPED, EXIT_FALSIFIED, EXIT_INCONCLUSIVE = range(5)

_OUTPUTS = {
    "simulate": ("summary.json",),
    "norms": ("norms.json",),
    "check": ("report.json",),
    "envelope": ("envelope.json",),
    "lyapunov": ("report.json",),
}


def _dumps(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def _space(space: Any) -> str:
    if isinstance(space, str):
        if space.startswith("{"):
            return space
        return json.dumps({"kind": space})
    return json.dumps(space)


def make_system(name: str, r: float = 1.0, n: int = 1, **params: float) -> System:
    """Builds a registered system, e.g. ``make_system("linear_scalar", a=-1, b=0)``."""
    return System.from_json(json.dumps({"name": name, "n": n, "r": r, "params": params}))


def space_norm(segment: Segment, space: Any, options: NormOptions | None = None) -> float:
    """Norm in ``space``: ``"sup_c0"``, ``{"kind": "sobolev", "p": 2}`` or ``{"kind": "hoelder", "a": 0.5}``."""
    return _core.space_norm(segment, _space(space), options or NormOptions())


def sample(config: Mapping[str, Any], count: int) -> list[Segment]:
    """Histories 0..count-1 of a sampler stream (keys: family, space, radius, dimension, seed, delay, intervals, radial)."""
    return _core.sample(_dumps(config), count)


def dini_derivative(system: System, functional: Mapping[str, Any], segment: Segment,
                    prolongation: bool = False) -> dict:
    """Forward-quotient ladder of a functional along the flow or along the prolongation."""
    return json.loads(_core.dini_derivative(system, _dumps(functional), segment, prolongation))


def functional_value(functional: Mapping[str, Any], segment: Segment) -> float:
    return _core.functional_value(_dumps(functional), segment)


def _decode(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if value in ("inf", "-inf", "nan"):
        return float(value)
    return value


def run(command: str, config: Mapping[str, Any], *, selector: str | None = None, seed: int | None = None,
        threads: int | None = None, out_dir: str | os.PathLike | None = None) -> dict:
    """Runs one command of the command line tool in-process.

    Returns ``{"exit_code", "stderr", "outputs", "out_dir"}`` where ``outputs``
    maps each JSON output file to its decoded content. Without ``out_dir``
    the files go to a temporary directory that is removed afterwards.
    """
    if command not in _OUTPUTS:
        raise ValueError(f"unknown command {command!r}")

    def go(directory: Path) -> dict:
        cfg = directory / "config.json"
        cfg.write_text(_dumps(config))
        args = [command] + ([selector] if selector else []) + ["--config", str(cfg), "--out", str(directory)]
        if seed is not None:
            args += ["--seed", str(seed)]
        if threads is not None:
            args += ["--threads", str(threads)]
        code, _, err = _core.run_cli(args)
        outputs = {}
        for name in _OUTPUTS[command]:
            path = directory / name
            if path.exists():
                outputs[name] = _decode(json.loads(path.read_text()))
        return {"exit_code": code, "stderr": err, "outputs": outputs, "out_dir": str(directory)}

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        return go(Path(out_dir))
    with tempfile.TemporaryDirectory(prefix="delaystab_") as tmp:
        result = go(Path(tmp))
        result["out_dir"] = None
        return result


def _report(result: dict, name: str) -> dict:
    if result["exit_code"] == EXIT_ERROR:
        raise ConfigError(result["stderr"].strip())
    out = result["outputs"][name]
    out["exit_code"] = result["exit_code"]
    return out


def norms(config: Mapping[str, Any], **kw: Any) -> dict:
    return _report(run("norms", config, **kw), "norms.json")


def check(prop: str, config: Mapping[str, Any], **kw: Any) -> dict:
    """Property check (ls, ga, uga, lags, rfc, gas-vs-ugas); the result holds ``report`` and ``config``."""
    return _report(run("check", config, selector=prop, **kw), "report.json")


def envelope(config: Mapping[str, Any], **kw: Any) -> dict:
    return _report(run("envelope", config, **kw), "envelope.json")


def lyapunov(condition: str, config: Mapping[str, Any], **kw: Any) -> dict:
    """Lyapunov condition check (theorem5, theorem6, rfc-sufficient)."""
    return _report(run("lyapunov", config, selector=condition, **kw), "report.json")

