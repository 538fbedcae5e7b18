"""Command-line entry point: ``dcecavity <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 physics-domain
failure (unstable, marginal, infeasible, no boundary found).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings

import numpy as np

from . import calibration
from .errors import DCEError, DomainError
from .lyapunov import solve_steady
from .model import MODE_NAMES, ModelParams, build_diffusion, build_drift, collective_mode_occupation, occupations
from .spectral import COHERENT_THRESHOLD, KERNELS, find_stability_boundary, regime_report, spectral_point
from .sweep import PRESETS, Control, SweepSpec, emit_csv, emit_plot, preset, preset_comments, run_sweep

__all__ = ["main", "load_config", "ConfigError"]

EXIT_OK, EXIT_USAGE, EXIT_PHYSICS = 0, 1, 2


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    return _finite_or_none(obj)


def _dump(obj, out=None):
    out = out or sys.stdout
    out.write(json.dumps(_clean(obj), indent=2) + "\n")


def load_config(path):
    """Read a JSON run configuration.

    The document carries ``"units": "kappa"`` with a ``"model"`` block of
    :class:`ModelParams` fields, or ``"units": "si"`` with a ``"physical"``
    block of :class:`PhysicalParams` fields.  Other top-level keys hold
    command options (for example ``"sweep"``).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    units = doc.get("units")
    if units not in ("kappa", "si"):
        raise ConfigError(f"units: expected 'kappa' or 'si', got {units!r}")
    has_model, has_phys = "model" in doc, "physical" in doc
    if has_model == has_phys:
        raise ConfigError("exactly one of 'model' or 'physical' must be present")
    if (units == "kappa") != has_model:
        raise ConfigError(f"units: {units!r} does not match the parameter block present")
    block = doc["model"] if has_model else doc["physical"]
    if not isinstance(block, dict):
        raise ConfigError(f"{'model' if has_model else 'physical'}: must be a JSON object")
    return doc


def _model_from_doc(doc):
    """``(ModelParams, calibration Derived or None)`` for a loaded config."""
    if doc["units"] == "kappa":
        block = doc["model"]
        known = set(ModelParams.__dataclass_fields__)
        unknown = sorted(set(block) - known)
        if unknown:
            raise ConfigError(f"model.{unknown[0]}: unknown model parameter")
        try:
            return ModelParams(**block), None
        except ValueError as exc:
            raise ConfigError(f"model.{exc}") from None
    try:
        pp = calibration.PhysicalParams.from_dict(doc["physical"])
    except ValueError as exc:
        raise ConfigError(f"physical.{exc}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        derived = calibration.derive_rates(pp)
    return derived.params, derived


def parse_band(text):
    """Parse ``wmin:wmax:n`` into an array of ``n`` equispaced frequencies."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--band: expected wmin:wmax:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--band: expected wmin:wmax:n, got {text!r}") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or (n > 1 and not lo < hi):
        raise ConfigError(f"--band: need wmin < wmax and n >= 1, got {text!r}")
    return np.linspace(lo, hi, n)


def _band(args):
    return None if args.band is None else parse_band(args.band)


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    doc = load_config(args.config)
    p, derived = _model_from_doc(doc)
    return doc, p, derived


# --- commands --------------------------------------------------------------

def cmd_steady(args):
    _, p, _ = _load(args)
    band = _band(args)
    rep = regime_report(p, band, args.coherent_threshold)
    ss = solve_steady(build_drift(p), build_diffusion(p))
    result = {"model": p.as_dict(), "stable": ss.stable, "max_re_eig": ss.max_re_eig}
    code = EXIT_OK
    if ss.stable:
        n = occupations(ss.v)
        result["residual"] = ss.residual
        result["occupations"] = dict(zip(MODE_NAMES, n))
        if p.g < p.G:
            n_b, r = collective_mode_occupation(ss.v, p)
            result["collective_mode"] = {"occupation": n_b, "squeezing_r": r}
    else:
        code = EXIT_PHYSICS
        result["occupations"] = None
    result["regime_report"] = rep.as_dict()
    _dump(result)
    return code


def _sweep_spec_from_doc(doc, p):
    block = doc.get("sweep")
    if not isinstance(block, dict):
        raise ConfigError("sweep: a 'sweep' object is required without --preset")
    allowed = {"control", "from", "to", "points", "fixed_partner_xi", "omega_band", "xi_max_method"}
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"sweep.{unknown[0]}: unknown sweep option")
    for key in ("control", "from", "to", "points"):
        if key not in block:
            raise ConfigError(f"sweep.{key}: missing")
    try:
        control = Control(block["control"])
    except ValueError:
        valid = ", ".join(c.value for c in Control)
        raise ConfigError(f"sweep.control: expected one of {valid}, got {block['control']!r}") from None
    try:
        return SweepSpec(
            base=p,
            control=control,
            start=float(block["from"]),
            stop=float(block["to"]),
            points=block["points"],
            fixed_partner_xi=block.get("fixed_partner_xi"),
            omega_band=block.get("omega_band"),
            xi_max_method=block.get("xi_max_method", "formula"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep: {exc}") from None


def cmd_sweep(args):
    columns = None
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; valid presets: {', '.join(PRESETS)}")
        fp = preset(args.preset, args.points)
        spec = fp.spec
        if args.coherent_threshold != COHERENT_THRESHOLD or args.band is not None:
            spec = SweepSpec(**{**spec.__dict__, "coherent_threshold": args.coherent_threshold,
                                "omega_band": _band(args)})
        label, comments, columns = fp.name, preset_comments(fp), fp.columns
        out = args.out or f"{fp.name}.csv"
    else:
        doc, p, _ = _load(args)
        spec = _sweep_spec_from_doc(doc, p)
        if args.points is not None:
            spec = SweepSpec(**{**spec.__dict__, "points": args.points})
        if args.band is not None or args.coherent_threshold != COHERENT_THRESHOLD:
            spec = SweepSpec(**{**spec.__dict__, "coherent_threshold": args.coherent_threshold,
                                "omega_band": _band(args) if args.band else spec.omega_band})
        label, out = "sweep", args.out or "sweep.csv"
        comments = (f"config: {args.config}", f"control: {spec.control.value}")
    table = run_sweep(spec, label=label, comments=comments)
    emit_csv(table, out)
    if args.svg:
        if not any(r.stable for r in table.rows):
            raise DomainError("no stable rows to plot")
        emit_plot(table, args.svg, columns=columns, xlabel=spec.control.value)
    unstable = sum(not r.stable for r in table.rows)
    print(f"wrote {len(table.rows)} rows to {out} ({unstable} unstable)")
    if args.svg:
        print(f"wrote plot to {args.svg}")
    return EXIT_OK


def cmd_spectrum(args):
    _, p, _ = _load(args)
    band = _band(args)
    if band is None:
        from .spectral import default_band

        band = default_band()
    sp = spectral_point(p, band)
    header = ["omega"] + [f"{part}_{k}" for k in KERNELS for part in ("re", "im")]
    rows = []
    for i, w in enumerate(np.atleast_1d(band)):
        row = [repr(float(w))]
        for k in KERNELS:
            z = complex(np.atleast_1d(getattr(sp, k))[i])
            row += [repr(z.real), repr(z.imag)]
        rows.append(row)
    if args.out:
        try:
            fh = open(args.out, "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise OSError(f"cannot write CSV to {args.out}: {exc.strerror or exc}") from exc
    else:
        fh = sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_stability(args):
    _, p, _ = _load(args)
    b = find_stability_boundary(p, args.channel)
    _dump({
        "channel": b.channel,
        "lambda_critical": b.lambda_critical,
        "lambda_predicted": b.lambda_predicted,
        "relative_gap": b.relative_gap,
        "max_re_eig_at_boundary": b.max_re_eig,
    })
    return EXIT_OK


def cmd_calibrate(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    doc = load_config(args.config)
    if doc["units"] != "si":
        raise ConfigError("units: calibrate needs an 'si' config with a 'physical' block")
    try:
        pp = calibration.PhysicalParams.from_dict(doc["physical"])
    except ValueError as exc:
        raise ConfigError(f"physical.{exc}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        derived = calibration.derive_rates(pp)
    _dump(derived.as_dict())
    for msg in derived.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "stability": cmd_stability,
    "calibrate": cmd_calibrate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dcecavity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--band", help="frequency band wmin:wmax:n in units of kappa")
        sp.add_argument("--coherent-threshold", type=float, default=COHERENT_THRESHOLD,
                        help="coherent-regime threshold on |Im/Re| of the induced gain")

    common(sub.add_parser("steady", help="steady-state occupations and regime report (JSON)"))
    sp = sub.add_parser("sweep", help="parameter sweep to CSV and optional SVG")
    common(sp)
    sp.add_argument("--preset", help=f"figure preset: {', '.join(PRESETS)}")
    sp.add_argument("--out", help="CSV output path (default <preset>.csv)")
    sp.add_argument("--svg", help="SVG plot output path")
    sp.add_argument("--points", type=int, help="override the number of grid points")
    sp = sub.add_parser("spectrum", help="self-energy and gain kernels over a band (CSV)")
    common(sp)
    sp.add_argument("--out", help="CSV output path (default stdout)")
    sp = sub.add_parser("stability", help="numerical stability boundary vs closed-form bound")
    common(sp)
    sp.add_argument("--channel", choices=("mechanical", "atomic"), default="mechanical")
    common(sub.add_parser("calibrate", help="map SI parameters to dimensionless model parameters"))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except DCEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
