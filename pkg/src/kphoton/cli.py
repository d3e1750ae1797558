"""Command-line interface.

Subcommands ``state``, ``wigner``, ``cov``, ``separability``, ``measures`` and
``sector``.  States come from flags or from a JSON config (``--config``);
flags win.  Reports are JSON on stdout (or ``--out``); Wigner grids are CSV
with columns ``x,p,W`` plus a JSON sidecar header.

Exit codes: 0 success, 2 invalid spec, 3 truncation budget violated,
4 state not confined to the requested sector, 5 standardization failed,
6 Wigner grid too small.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fock import TruncationConfig, TruncationError, TwoModeState, check_density, embed, partial_trace
from .measures import entanglement_entropy, mean_energy, p_min, purity, von_neumann_entropy
from .multiphoton import NotConfinedError, detect_sector, infer_k, make_quadratures
from .phase_space import GridSpec, GridTooSmallError, covariance, wigner_multiphoton, wigner_single_mode
from .separability import StandardizationError, assess
from .states import TAIL_BUDGET, gamma_for_energy, mp_thermal, mp_tmsv, product, thermal

STATE_SCHEMA = "kphoton.state/1"
FAMILIES = ("tmsv", "mp_tmsv", "thermal", "mp_thermal", "product", "file")
_REQUIRED = {
    "tmsv": ({"gamma", "r"}, set()),
    "mp_tmsv": ({"gamma", "r"}, {"k"}),
    "thermal": (set(), {"nbar"}),
    "mp_thermal": (set(), {"nu", "k"}),
    "product": ({"nbar", "nu"}, set()),
    "file": (set(), {"path"}),
}
_OPTIONAL = {"mp_thermal": {"j"}, "product": {"k", "j"}}
_PARAMS = ("gamma", "r", "nbar", "nu", "k", "j", "path")


class SpecError(ValueError):
    """Invalid state specification or flag combination."""


EXIT_CODES = (
    (SpecError, 2),
    (TruncationError, 3),
    (NotConfinedError, 4),
    (StandardizationError, 5),
    (GridTooSmallError, 6),
    (ValueError, 2),
)


@dataclass(frozen=True)
class StateSpec:
    family: str
    gamma: float | None = None
    r: float | None = None
    nbar: tuple[float, ...] | None = None
    nu: tuple[float, ...] | None = None
    k: int | None = None
    j: int | None = None
    n_max: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        one_of, required = _REQUIRED[self.family]
        present = {name for name in _PARAMS if getattr(self, name) is not None}
        missing = required - present
        if missing:
            raise SpecError(f"family {self.family} requires {', '.join(sorted(missing))}")
        if one_of and len(one_of & present) != 1:
            raise SpecError(f"family {self.family} requires exactly one of {', '.join(sorted(one_of))}")
        extra = present - one_of - required - _OPTIONAL.get(self.family, set())
        if extra:
            raise SpecError(f"family {self.family} does not take {', '.join(sorted(extra))}")
        if self.k is not None and self.k < 1:
            raise SpecError("k must be >= 1")
        if self.j is not None and not 0 <= self.j < (self.k or 1):
            raise SpecError("j must satisfy 0 <= j < k")
        if self.family == "product":
            factors = self.nbar if self.nbar is not None else self.nu
            if len(factors) != 2:
                raise SpecError("product needs two factor parameters, e.g. --nbar 0.5,1")
            if self.nu is not None and self.k is None:
                raise SpecError("product of mp_thermal factors requires k")
        if self.family == "thermal" and len(self.nbar) != 1:
            raise SpecError("thermal takes a single nbar")
        if self.family == "mp_thermal" and len(self.nu) != 1:
            raise SpecError("mp_thermal takes a single nu")
        if self.n_max is not None and self.n_max < 1:
            raise SpecError("n_max must be >= 1")

    def echo(self) -> dict:
        return {key: (list(v) if isinstance(v, tuple) else v) for key, v in asdict(self).items() if v is not None}


def build_state(spec: StateSpec):
    """Two-mode :class:`TwoModeState` or single-mode density matrix for ``spec``."""
    cfg = TruncationConfig(spec.n_max) if spec.n_max is not None else None
    fam = spec.family
    if fam in ("tmsv", "mp_tmsv"):
        return mp_tmsv(spec.gamma, spec.k or 1, cfg, r=spec.r)
    if fam == "thermal":
        return thermal(spec.nbar[0], cfg)
    if fam == "mp_thermal":
        return mp_thermal(spec.nu[0], spec.k, spec.j or 0, cfg)
    if fam == "product":
        if spec.nbar is not None:
            factors = [thermal(n, cfg) for n in spec.nbar]
        else:
            factors = [mp_thermal(n, spec.k, spec.j or 0, cfg) for n in spec.nu]
        n_max = max(f.shape[0] for f in factors) - 1
        return product(*(embed(f, n_max) for f in factors))
    return load_state(spec.path)


# -- state files ------------------------------------------------------------


def state_to_json(state) -> dict:
    if isinstance(state, TwoModeState):
        data = state.psi if state.is_pure else state.rho
        modes, kind, n_max = 2, "ket" if state.is_pure else "density", state.config.n_max
    else:
        data = np.asarray(state)
        modes, kind, n_max = 1, "density", data.shape[0] - 1
    return {
        "schema": STATE_SCHEMA,
        "modes": modes,
        "kind": kind,
        "n_max": n_max,
        "real": np.real(data).tolist(),
        "imag": np.imag(data).tolist(),
    }


def state_from_json(doc: dict):
    if doc.get("schema") != STATE_SCHEMA:
        raise SpecError(f"state file schema must be {STATE_SCHEMA!r}")
    try:
        data = np.asarray(doc["real"], float) + 1j * np.asarray(doc["imag"], float)
        cfg = TruncationConfig(int(doc["n_max"]))
        if doc["modes"] == 1:
            if data.shape != (cfg.dim, cfg.dim):
                raise SpecError("single-mode density has the wrong shape")
            return data
        if doc["kind"] == "ket":
            return TwoModeState.from_ket(data, cfg)
        return TwoModeState.from_density(data, cfg)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed state file: {exc}") from exc


def load_state(path: str):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read state file {path}: {exc}") from exc
    return state_from_json(doc)


# -- output -----------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, complex):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    return obj


def dumps(doc: dict) -> str:
    # repr of a float is the shortest string that round-trips, so output is exact and stable
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"


def envelope(command: str, spec: StateSpec | None, state, payload: dict) -> dict:
    truncation = {"tail_budget": TAIL_BUDGET}
    if isinstance(state, TwoModeState):
        truncation.update(n_max=state.config.n_max, tol_psd=state.config.tol_psd, tol_trace=state.config.tol_trace)
    elif state is not None:
        cfg = TruncationConfig(np.asarray(state).shape[0] - 1)
        truncation.update(n_max=cfg.n_max, tol_psd=cfg.tol_psd, tol_trace=cfg.tol_trace)
    return {
        "tool": "kphoton",
        "version": __version__,
        "command": command,
        "conventions": {
            "quadratures": "x=a+a^dag, p=i(a^dag-a)",
            "wigner_normalization": "integral W dx dp = 1",
            "entropy_units": "nats",
        },
        "truncation": truncation,
        "spec": None if spec is None else spec.echo(),
        "payload": payload,
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def write_grid_csv(grid, path: str) -> None:
    xg, pg = np.meshgrid(grid.x_axis, grid.p_axis, indexing="ij")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "p", "W"])
        for x, p, w in zip(xg.ravel(), pg.ravel(), grid.values.ravel()):
            writer.writerow([repr(float(x)), repr(float(p)), repr(float(w))])


def read_grid_csv(path: str):
    """Return ``(x_axis, p_axis, values)`` from a CSV written by :func:`write_grid_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x_axis = np.unique(data[:, 0])
    p_axis = np.unique(data[:, 1])
    return x_axis, p_axis, data[:, 2].reshape(len(x_axis), len(p_axis))


# -- commands -----------------------------------------------------------------


def _two_mode(state, command: str) -> TwoModeState:
    if not isinstance(state, TwoModeState):
        raise SpecError(f"{command} needs a two-mode state")
    return state


def _analysis_k(args, spec: StateSpec | None, state) -> int:
    if args.analysis_k is not None:
        return args.analysis_k
    if spec is not None and spec.k is not None:
        return spec.k
    return infer_k(state)


def cmd_state(args, spec: StateSpec) -> dict:
    state = build_state(spec)
    report = check_density(state)
    k = _analysis_k(args, spec, state)
    payload = {
        "modes": 2 if isinstance(state, TwoModeState) else 1,
        "check_density": {
            "ok": report.ok,
            "failures": list(report.failures),
            "hermiticity": report.hermiticity,
            "trace_deviation": report.trace_deviation,
            "min_eigenvalue": report.min_eigenvalue,
        },
        "purity": purity(state),
        "sector": detect_sector(state, k).as_dict(),
    }
    if isinstance(state, TwoModeState):
        trace = np.vdot(state.psi, state.psi) if state.is_pure else np.trace(state.rho)
        payload.update(dim=state.dim, trace=float(trace.real))
        payload["energy"] = mean_energy(state).as_dict()
    else:
        payload.update(dim=state.shape[0], trace=float(np.trace(state).real))
        payload["energy"] = {"mean_energy": float(np.real(np.sum(np.diag(state) * np.arange(state.shape[0]))))}
    if args.save_state:
        Path(args.save_state).write_text(dumps(state_to_json(state)))
    return envelope("state", spec, state, payload)


def cmd_wigner(args, spec: StateSpec) -> dict:
    if not args.out:
        raise SpecError("wigner requires --out")
    state = build_state(spec)
    rho = partial_trace(state, args.mode) if isinstance(state, TwoModeState) else state
    k = _analysis_k(args, spec, rho)
    grid = GridSpec(args.grid_range, args.grid_points)
    if k == 1:
        wg = wigner_single_mode(rho, grid)
        j = 0
    else:
        report = detect_sector(rho, k)
        j = args.j if args.j is not None else report.sectors[0]
        wg = wigner_multiphoton(rho, k, j, grid)
    header = {"k": k, "j": j, "mode": args.mode, **wg.header(), "negativity_witness": wg.minimum < 0}
    doc = envelope("wigner", spec, rho, header)
    if args.format == "json":
        full = envelope("wigner", spec, rho, {**header, "values": wg.values})
        Path(args.out).write_text(dumps(full))
    else:
        write_grid_csv(wg, args.out)
        Path(args.out + ".json").write_text(dumps(doc))
    return doc


def cmd_cov(args, spec: StateSpec) -> dict:
    state = build_state(spec)
    k = _analysis_k(args, spec, state)
    n_max = state.config.n_max if isinstance(state, TwoModeState) else state.shape[0] - 1
    cm = covariance(state, make_quadratures(k, TruncationConfig(n_max)))
    return envelope("cov", spec, state, cm.as_dict())


def cmd_separability(args, spec: StateSpec) -> dict:
    state = _two_mode(build_state(spec), "separability")
    k = args.analysis_k
    if k is None:
        k = infer_k(state)
    return envelope("separability", spec, state, assess(state, k).as_dict())


def cmd_measures(args, spec: StateSpec | None) -> dict:
    payload = {}
    state = None
    if spec is not None:
        state = build_state(spec)
        payload["entropy"] = von_neumann_entropy(state)
        payload["purity"] = purity(state)
        if isinstance(state, TwoModeState):
            payload["energy"] = mean_energy(state).as_dict()
            payload["reduced_entropy"] = [von_neumann_entropy(partial_trace(state, m)) for m in (1, 2)]
            if state.is_pure:
                payload["entanglement_entropy"] = entanglement_entropy(state)
    if args.compare_k:
        energy = 1.0 if args.energy is None else args.energy
        table = []
        for k in args.compare_k:
            g = gamma_for_energy(energy, k)
            s = mp_tmsv(g, k)
            table.append(
                {
                    "k": k,
                    "gamma": g,
                    "energy": mean_energy(s).mean_energy,
                    "entanglement_entropy": entanglement_entropy(s),
                    "p_min": p_min(energy, k),
                }
            )
        payload["fixed_energy_comparison"] = {"energy": energy, "rows": table}
    elif args.energy is not None:
        payload["p_min"] = p_min(args.energy, 1)
    if not payload:
        raise SpecError("measures needs a state spec or --compare-k")
    return envelope("measures", spec, state, payload)


def cmd_sector(args, spec: StateSpec) -> dict:
    state = build_state(spec)
    k = _analysis_k(args, spec, state)
    payload = detect_sector(state, k, args.tol).as_dict()
    payload["inferred_k"] = infer_k(state, args.tol)
    return envelope("sector", spec, state, payload)


COMMANDS = {
    "state": cmd_state,
    "wigner": cmd_wigner,
    "cov": cmd_cov,
    "separability": cmd_separability,
    "measures": cmd_measures,
    "sector": cmd_sector,
}


# -- argument handling ---------------------------------------------------------


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("state")
    g.add_argument("--config", help="JSON state spec; flags override its fields")
    g.add_argument("--family", choices=FAMILIES)
    sq = g.add_mutually_exclusive_group()
    sq.add_argument("--gamma", type=float)
    sq.add_argument("--r", type=float)
    g.add_argument("--nbar", type=_float_list, help="thermal mean(s); two values for a product")
    g.add_argument("--nu", type=_float_list, help="multi-photon thermal mean(s)")
    g.add_argument("--k", type=int, help="photons per quantum of the state family (also the default analysis k)")
    g.add_argument("--j", type=int, help="sector offset")
    g.add_argument("--nmax", type=int, help="Fock truncation per mode (automatic if omitted)")
    g.add_argument("--path", help="state file for --family file")
    common.add_argument("--analysis-k", type=int, help="k of the quadratures used for analysis")
    common.add_argument("--out", help="output path (stdout if omitted; required for wigner)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = argparse.ArgumentParser(prog="kphoton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kphoton {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("state", parents=[common], help="build a state and summarise it").add_argument(
        "--save-state", help="also write the state as a JSON state file"
    )
    w = sub.add_parser("wigner", parents=[common], help="Wigner grid (CSV + JSON header)")
    w.add_argument("--mode", type=int, choices=(1, 2), default=1)
    w.add_argument("--grid-range", type=float, help="half-width of the square grid")
    w.add_argument("--grid-points", type=int, default=201)
    sub.add_parser("cov", parents=[common], help="covariance matrix in k-quadratures")
    sub.add_parser("separability", parents=[common], help="criterion verdict with PPT oracle")
    m = sub.add_parser("measures", parents=[common], help="entropy, purity, energy, fixed-energy comparison")
    m.add_argument("--compare-k", type=_int_list)
    m.add_argument("--energy", type=float)
    s = sub.add_parser("sector", parents=[common], help="multi-photon sector detection")
    s.add_argument("--tol", type=float, default=1e-10)
    return parser


def spec_from_args(args) -> StateSpec | None:
    fields = {}
    if args.config:
        try:
            fields = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(fields, dict):
            raise SpecError("config must be a JSON object")
        fields = dict(fields)
        if "nmax" in fields:
            fields["n_max"] = fields.pop("nmax")
        for key in ("nbar", "nu"):
            if isinstance(fields.get(key), (int, float)):
                fields[key] = [fields[key]]
    flags = {
        "family": args.family,
        "gamma": args.gamma,
        "r": args.r,
        "nbar": args.nbar,
        "nu": args.nu,
        "k": args.k,
        "j": args.j,
        "n_max": args.nmax,
        "path": args.path,
    }
    if args.gamma is not None or args.r is not None:
        fields.pop("gamma", None)
        fields.pop("r", None)
    fields.update({key: v for key, v in flags.items() if v is not None})
    if not fields:
        return None
    unknown = set(fields) - {"family", "n_max", *_PARAMS}
    if unknown:
        raise SpecError(f"unknown spec fields: {', '.join(sorted(unknown))}")
    if "family" not in fields:
        raise SpecError("a state spec needs --family")
    for key in ("nbar", "nu"):
        if fields.get(key) is not None:
            fields[key] = tuple(float(v) for v in fields[key])
    return StateSpec(**fields)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.format == "csv" and args.command != "wigner":
            raise SpecError("--format csv applies to wigner only")
        if args.command == "wigner" and args.format is None:
            args.format = "csv"
        spec = spec_from_args(args)
        if spec is None and args.command != "measures":
            raise SpecError(f"{args.command} needs a state spec (--family ... or --config)")
        doc = COMMANDS[args.command](args, spec)
    except tuple(cls for cls, _ in EXIT_CODES) as exc:
        code = next(c for cls, c in EXIT_CODES if isinstance(exc, cls))
        print(f"kphoton: error: {exc}", file=sys.stderr)
        return code
    if args.command == "wigner":
        sys.stdout.write(dumps(doc))
    else:
        _emit(dumps(doc), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
