"""Command-line front end.

Subcommands: keyrate | sweep | maxdist | optnoise | compare.
Configuration comes from defaults, an optional JSON config file, and
flags, in increasing precedence.  Outputs are deterministic CSV or JSON
tables carrying the fully resolved configuration as provenance.

Exit codes: 0 success, 2 configuration error, 3 numeric or physicality
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import __version__
from .analysis import (
    DETECTOR_PRESETS,
    VARIANCE_PRESETS,
    ComparisonTable,
    MaxDistanceResult,
    SweepSpec,
    SweepResult,
    compare_protocols,
    max_distance,
    optimize_added_noise,
    sweep,
)
from .errors import CVMDIError, InvalidParameterError, NumericDomainError, StructuralError
from .protocols import AddedNoiseParams, KeyRateReport, ProtocolParams, key_rate

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "protocol": "squeezed",
    "variance": "ideal",
    "detector": "perfect",
    "v_a": None,            # filled from variance preset unless given
    "v_b": None,
    "l_ac": 0.0,
    "l_bc": 0.0,
    "alpha": 0.2,
    "eps1": 0.002,
    "eps2": 0.002,
    "eta": None,            # filled from detector preset unless given
    "v_el": None,
    "beta": 1.0,
    "gain": "optimize",
    "chi_n": "optimize",
    "geometry": "symmetric",
    "sweep": None,          # {"variable":..., "start":..., "stop":..., "step":...}
    "tol_km": 0.05,
    "format": "csv",
    "out": None,
    "precision": 9,
}

_SWEEP_KEYS = {"variable", "start", "stop", "step", "optimize_noise"}

CSV_COLUMNS = ["x", "I_AB_bits", "chi_BE_bits", "K_bits",
               "lambda1", "lambda2", "lambda3", "lambda4", "lambda5",
               "gain", "chi_N_snu", "flags"]

X_UNITS = {"distance-symmetric": "km", "lac-with-fixed-lbc": "km", "chi-n": "snu"}


def _fail_config(msg: str) -> "NoReturn":  # noqa: F821
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(EXIT_CONFIG)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail_config(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        _fail_config(f"config {path} must hold a JSON object")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        _fail_config(f"unknown config keys: {', '.join(sorted(unknown))}")
    sweep_block = data.get("sweep")
    if sweep_block is not None:
        if not isinstance(sweep_block, dict):
            _fail_config("config key 'sweep' must be an object")
        bad = set(sweep_block) - _SWEEP_KEYS
        if bad:
            _fail_config(f"unknown sweep keys: {', '.join(sorted(bad))}")
    return data


def _merge(config_path: str | None, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if config_path:
        cfg.update(load_config(config_path))
    flag_map = {
        "protocol": "protocol", "geometry": "geometry", "detector": "detector",
        "variance": "variance", "lac": "l_ac", "lbc": "l_bc",
        "chi_n": "chi_n", "gain": "gain", "format": "format", "out": "out",
        "tol_km": "tol_km", "beta": "beta",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _num(cfg: dict, key: str) -> float:
    try:
        return float(cfg[key])
    except (TypeError, ValueError):
        _fail_config(f"field '{key}' must be a number, got {cfg[key]!r}")


def resolve_params(cfg: dict) -> ProtocolParams:
    variance = cfg["variance"]
    if isinstance(variance, str):
        if variance not in VARIANCE_PRESETS:
            try:
                variance = float(variance)
            except ValueError:
                _fail_config(f"variance must be 'ideal', 'realistic' or a number, "
                             f"got {cfg['variance']!r}")
        else:
            variance = VARIANCE_PRESETS[variance]
    v_a = _num(cfg, "v_a") if cfg["v_a"] is not None else float(variance)
    v_b = _num(cfg, "v_b") if cfg["v_b"] is not None else float(variance)
    detector = cfg["detector"]
    if detector not in DETECTOR_PRESETS:
        _fail_config(f"detector must be one of {sorted(DETECTOR_PRESETS)}, got {detector!r}")
    eta, v_el = DETECTOR_PRESETS[detector]
    if cfg["eta"] is not None:
        eta = _num(cfg, "eta")
    if cfg["v_el"] is not None:
        v_el = _num(cfg, "v_el")
    gain = cfg["gain"]
    if isinstance(gain, str):
        if gain != "optimize":
            try:
                gain = float(gain)
            except ValueError:
                _fail_config(f"gain must be a number or 'optimize', got {cfg['gain']!r}")
    gain = None if gain == "optimize" else gain
    try:
        return ProtocolParams(
            v_a=v_a, v_b=v_b,
            l_ac=_num(cfg, "l_ac"), l_bc=_num(cfg, "l_bc"),
            alpha=_num(cfg, "alpha"),
            eps1=_num(cfg, "eps1"), eps2=_num(cfg, "eps2"),
            eta=eta, v_el=v_el, beta=_num(cfg, "beta"),
            gain=gain, protocol=cfg["protocol"],
        )
    except InvalidParameterError as exc:
        _fail_config(str(exc))


def resolve_noise(cfg: dict, params: ProtocolParams) -> tuple[AddedNoiseParams | None, bool]:
    """Returns (noise, optimize_noise) for the configured chi_n."""
    if params.protocol != "squeezed-modified":
        return None, False
    chi = cfg["chi_n"]
    if chi == "optimize":
        return None, True
    try:
        return AddedNoiseParams.from_chi_n(float(chi)), False
    except (TypeError, ValueError):
        _fail_config(f"chi_n must be a number or 'optimize', got {chi!r}")
    except InvalidParameterError as exc:
        _fail_config(str(exc))


def _resolved_echo(cfg: dict, params: ProtocolParams) -> dict:
    echo = {k: cfg[k] for k in sorted(DEFAULTS) if k not in ("v_a", "v_b", "eta", "v_el")}
    echo.update({
        "v_a": params.v_a, "v_b": params.v_b,
        "eta": params.eta, "v_el": params.v_el,
        "tool_version": __version__,
    })
    return echo


def _sig(value, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    return f"{value:.{digits}g}"


def _report_cells(report: KeyRateReport | None, digits: int, error: str | None = None) -> list[str]:
    if report is None:
        return [""] * 10 + [f"error:{error}"]
    lams = list(report.lambdas) + [None] * (5 - len(report.lambdas))
    cells = [
        _sig(report.mutual_info, digits),
        _sig(report.holevo, digits),
        _sig(report.key_rate, digits),
        *(_sig(l, digits) for l in lams),
        _sig(report.gain_used, digits),
        _sig(report.chi_n, digits),
        ";".join(report.flags),
    ]
    return cells


def _report_obj(report: KeyRateReport | None, digits: int, error: str | None = None) -> dict:
    if report is None:
        return {"error": error}
    rounded = lambda v: float(f"{v:.{digits}g}")  # noqa: E731
    return {
        "I_AB_bits": rounded(report.mutual_info),
        "chi_BE_bits": rounded(report.holevo),
        "K_bits": rounded(report.key_rate),
        "lambdas": [rounded(l) for l in report.lambdas],
        "gain": rounded(report.gain_used),
        "chi_N_snu": rounded(report.chi_n),
        "flags": list(report.flags),
    }


def _meta_lines(meta: dict) -> list[str]:
    flat = json.dumps(meta, sort_keys=True, separators=(",", ":"), default=str)
    return [f"# config {flat}"]


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(rows: list[tuple[float | None, KeyRateReport | None, str | None]],
               x_unit: str | None, meta: dict, cfg: dict):
    digits = int(cfg["precision"])
    if cfg["format"] == "json":
        payload_rows = []
        for x, rep, err in rows:
            obj = _report_obj(rep, digits, err)
            if x is not None:
                obj = {f"x_{x_unit}": float(f"{x:.{digits}g}"), **obj}
            payload_rows.append(obj)
        text = json.dumps({"metadata": meta, "rows": payload_rows},
                          sort_keys=True, indent=2, default=str) + "\n"
    else:
        header = CSV_COLUMNS.copy()
        if x_unit is None:
            header = header[1:]
        else:
            header[0] = f"x_{x_unit}"
        lines = _meta_lines(meta) + [",".join(header)]
        for x, rep, err in rows:
            cells = _report_cells(rep, digits, err)
            if x_unit is not None:
                cells = [_sig(x, digits)] + cells
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["out"])


def cmd_keyrate(cfg: dict) -> int:
    params = resolve_params(cfg)
    noise, optimize = resolve_noise(cfg, params)
    if optimize:
        chi_star, _ = optimize_added_noise(params)
        noise = AddedNoiseParams.from_chi_n(chi_star)
    report = key_rate(params, noise)
    _emit_rows([(None, report, None)], None, _resolved_echo(cfg, params), cfg)
    return 0


def cmd_sweep(cfg: dict) -> int:
    params = resolve_params(cfg)
    block = cfg["sweep"]
    if not block:
        _fail_config("sweep needs a 'sweep' config block with variable/start/stop/step")
    for field in ("variable", "start", "stop", "step"):
        if field not in block:
            _fail_config(f"sweep block is missing '{field}'")
    noise, optimize = resolve_noise(cfg, params)
    try:
        spec = SweepSpec(
            variable=block["variable"],
            start=float(block["start"]), stop=float(block["stop"]),
            step=float(block["step"]),
            base=params, noise=noise,
            optimize_noise=bool(block.get("optimize_noise", optimize)),
        )
    except (TypeError, ValueError) as exc:
        _fail_config(f"bad sweep block: {exc}")
    if not spec.grid():
        _fail_config("sweep grid is empty")
    result = sweep(spec)
    meta = {**result.metadata, **{"config": _resolved_echo(cfg, params)}}
    rows = [(r.x, r.report, r.error) for r in result.rows]
    _emit_rows(rows, X_UNITS[spec.variable], meta, cfg)
    return 0


def _maxdist_result(cfg: dict) -> tuple[MaxDistanceResult, ProtocolParams]:
    params = resolve_params(cfg)
    geometry = cfg["geometry"]
    noise, optimize = resolve_noise(cfg, params)
    if geometry == "symmetric":
        mode = "symmetric"
    elif geometry in ("asymmetric", "most-asymmetric"):
        mode = "fixed-lbc"
        if geometry == "most-asymmetric":
            params = ProtocolParams(**{**asdict(params), "l_bc": 0.0})
    else:
        _fail_config(f"unknown geometry {geometry!r}")
    if params.protocol == "squeezed-modified":
        policy = "optimized" if optimize else "fixed"
    else:
        policy = "none"
    res = max_distance(params, mode=mode, noise_policy=policy, noise=noise,
                       tol_km=float(cfg["tol_km"]))
    return res, params


def cmd_maxdist(cfg: dict) -> int:
    res, params = _maxdist_result(cfg)
    meta = _resolved_echo(cfg, params)
    digits = int(cfg["precision"])
    if cfg["format"] == "json":
        payload = {
            "metadata": meta,
            "result": {
                "l_star_km": float(f"{res.l_star_km:.{digits}g}"),
                "l_ab_km": float(f"{res.l_ab_km:.{digits}g}"),
                "mode": res.mode,
                "positive_at_origin": res.positive_at_origin,
                "capped": res.capped,
                "tol_km": res.tol_km,
            },
        }
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = _meta_lines(meta)
        lines.append("l_star_km,l_ab_km,mode,positive_at_origin,capped,tol_km")
        lines.append(",".join([
            _sig(res.l_star_km, digits), _sig(res.l_ab_km, digits), res.mode,
            _sig(res.positive_at_origin, digits), _sig(res.capped, digits),
            _sig(res.tol_km, digits),
        ]))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["out"])
    return 0


def cmd_optnoise(cfg: dict) -> int:
    params = resolve_params(cfg)
    if params.protocol != "squeezed-modified":
        _fail_config("optnoise needs --protocol squeezed-modified")
    chi_star, k_star = optimize_added_noise(params)
    report = key_rate(params, AddedNoiseParams.from_chi_n(chi_star))
    meta = _resolved_echo(cfg, params)
    digits = int(cfg["precision"])
    if cfg["format"] == "json":
        payload = {
            "metadata": meta,
            "result": {"chi_n_star_snu": float(f"{chi_star:.{digits}g}"),
                       "K_star_bits": float(f"{k_star:.{digits}g}"),
                       "report": _report_obj(report, digits)},
        }
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = _meta_lines(meta)
        lines.append("chi_n_star_snu,K_star_bits," + ",".join(CSV_COLUMNS[1:]))
        lines.append(",".join([_sig(chi_star, digits), _sig(k_star, digits)]
                              + _report_cells(report, digits)))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["out"])
    return 0


def cmd_compare(cfg: dict) -> int:
    params = resolve_params(cfg)
    table = compare_protocols(params, geometry=cfg["geometry"], tol_km=float(cfg["tol_km"]))
    meta = {**table.metadata, "config": _resolved_echo(cfg, params)}
    digits = int(cfg["precision"])
    if cfg["format"] == "json":
        rows = [{
            "protocol": r.protocol, "detector": r.detector,
            "l_bc_km": None if r.l_bc_km is None else float(f"{r.l_bc_km:.{digits}g}"),
            "l_star_km": float(f"{r.l_star_km:.{digits}g}"),
            "l_ab_km": float(f"{r.l_ab_km:.{digits}g}"),
            "positive_at_origin": r.positive_at_origin,
            "capped": r.capped,
        } for r in table.rows]
        text = json.dumps({"metadata": meta, "rows": rows},
                          sort_keys=True, indent=2, default=str) + "\n"
    else:
        lines = _meta_lines(meta)
        lines.append("protocol,detector,l_bc_km,l_star_km,l_ab_km,positive_at_origin,capped")
        for r in table.rows:
            lines.append(",".join([
                r.protocol, r.detector, _sig(r.l_bc_km, digits),
                _sig(r.l_star_km, digits), _sig(r.l_ab_km, digits),
                _sig(r.positive_at_origin, digits), _sig(r.capped, digits),
            ]))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg["out"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvmdi",
        description="Key-rate analysis for continuous-variable MDI QKD with squeezed states")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--protocol", choices=["squeezed", "squeezed-modified", "coherent"])
    common.add_argument("--geometry", choices=["symmetric", "asymmetric", "most-asymmetric"])
    common.add_argument("--detector", choices=["perfect", "practical"])
    common.add_argument("--variance", help="'ideal', 'realistic', or a number (shot-noise units)")
    common.add_argument("--lac", type=float, metavar="KM", help="Alice-relay channel length")
    common.add_argument("--lbc", type=float, metavar="KM", help="Bob-relay channel length")
    common.add_argument("--chi-n", dest="chi_n", metavar="X|optimize",
                        help="trusted added noise (snu) or 'optimize'")
    common.add_argument("--gain", metavar="G|optimize", help="displacement gain or 'optimize'")
    common.add_argument("--beta", type=float, help="reconciliation efficiency in [0, 1]")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--tol-km", dest="tol_km", type=float, metavar="X",
                        help="distance bisection tolerance")
    for name, fn in (("keyrate", cmd_keyrate), ("sweep", cmd_sweep),
                     ("maxdist", cmd_maxdist), ("optnoise", cmd_optnoise),
                     ("compare", cmd_compare)):
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _merge(args.config, args)
    try:
        return args.func(cfg)
    except (NumericDomainError, StructuralError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CVMDIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
