"""CSV and JSON serialization with fixed, locale-independent formatting.

Floats are written with 17 significant digits so that every value
round-trips exactly; rows are written in a fixed order so reruns with the
same inputs are byte-identical.
"""

import csv
import json
import math

import numpy as np

from .analytic import BallSpectrum, DiskSpectrum
from .errors import MissingArtifact
from .geometry import build_domain
from .spectrum import Mode

SPECTRUM_COLUMNS = ["k", "lambda", "family", "a", "n", "b", "trace_coeff"]
MPS_COLUMNS = ["tension", "rellich_residual", "cluster_size"]
FUNCTIONAL_COLUMNS = ["weight", "k", "lambda", "E", "E_w", "E_abs_w", "C_w", "rellich_residual"]


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except FileNotFoundError:
        raise MissingArtifact(f"{path} not found; run the producing stage first") from None


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no nan/inf; keep them as strings, finite floats at 17 digits
        return fmt(v) if not math.isfinite(v) else float(format(v, ".17g"))
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise MissingArtifact(f"{path} not found; run the producing stage first") from None


# ---- spectra ----------------------------------------------------------------

def spectrum_rows(spectrum):
    for md in spectrum.modes:
        kind, a, n, b = md.family
        row = [md.k, md.lam, kind, a, n, b, md.trace_coeff]
        if hasattr(md, "pair"):
            p = md.pair
            row += [p.tension, p.rellich_residual, p.cluster_size]
        yield row


def write_spectrum(path, spectrum):
    mps = bool(spectrum.modes) and hasattr(spectrum.modes[0], "pair")
    write_csv(path, SPECTRUM_COLUMNS + (MPS_COLUMNS if mps else []), spectrum_rows(spectrum))


def read_analytic_spectrum(path, domain):
    """Rebuild a disk or ball spectrum from its CSV export."""
    rows = read_csv(path)
    modes = []
    for r in rows:
        kind = r["family"]
        if kind == "disk":
            fam = ("disk", int(r["a"]), int(r["n"]), r["b"])
        else:
            fam = ("ball", int(r["a"]), int(r["n"]), int(r["b"]))
        modes.append(Mode(int(r["k"]), float(r["lambda"]), fam, float(r["trace_coeff"])))
    cls = DiskSpectrum if domain.kind == "disk" else BallSpectrum
    return cls(domain, modes)


def write_mps_coeffs(path, spectrum):
    entries = []
    for md in spectrum.modes:
        p = md.pair
        entries.append({
            "k": md.k,
            "lambda": p.lam,
            "sym_class": p.sym_class,
            "cluster_size": p.cluster_size,
            "tension": p.tension,
            "rellich_residual": p.rellich_residual,
            "center": list(p.center),
            "m": [int(v) for v in p.basis[0]],
            "parity": [int(v) for v in p.basis[1]],
            "coeffs": [float(v) for v in p.coeffs],
        })
    write_json(path, {"modes": entries})


def read_mps_spectrum(path, domain):
    from .mps import MpsEigenpair, MpsMode, MpsSpectrum

    data = read_json(path)
    counters, modes = {}, []
    for e in data["modes"]:
        coeffs = np.array(e["coeffs"], dtype=float)
        coeffs.setflags(write=False)
        basis = (np.array(e["m"], dtype=np.int64), np.array(e["parity"], dtype=np.int64))
        pair = MpsEigenpair(float(e["lambda"]), coeffs, float(e["tension"]), float(e["rellich_residual"]),
                            int(e["cluster_size"]), e["sym_class"], basis, tuple(e["center"]), domain)
        counters[pair.sym_class] = counters.get(pair.sym_class, 0) + 1
        fam = ("mps", pair.sym_class, counters[pair.sym_class], pair.cluster_size)
        modes.append(MpsMode(int(e["k"]), pair.lam, fam, 1.0, pair))
    return MpsSpectrum(domain, modes)


def domain_from_block(block):
    block = dict(block)
    kind = block.pop("kind")
    x0 = block.pop("x0", None)
    return build_domain(kind=kind, x0=None if x0 is None else tuple(x0), **block)
