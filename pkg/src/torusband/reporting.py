"""Report pipeline: each stage writes delimited tables, a figure, and a
manifest entry into the output directory.

Stages are independently rerunnable and deterministic: a seeded symbol is
regenerated rather than read back, so rerunning any stage reproduces its
files byte for byte (timestamps are never written).  The TORUSBAND_OUT
environment variable, when set, prefixes the output directory.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import matplotlib
import numpy as np

from . import __version__, figures
from .classical import (band_bounds, line_coefficients, q_infinity_interval,
                        rational_directions, torus_extrema, trig_extrema)
from .config import ExperimentConfig
from .errors import ConfigError, DimensionCapExceeded
from .ladder import extract_leg, harmonic_ladder, match_spectra, predict_lattice
from .model1d import (Model1D, ZRegion, potential_range, resolvent_bound_scan,
                      suggest_j_max, write_probe)
from .model1d import low_lying_spectrum
from .shell import (assemble_matrix, build_mode_shell, compute_spectrum,
                    read_spectrum, write_spectrum)
from .symbols import (SymbolCoefficients, generate_random_symbol, read_symbol,
                      write_symbol)
from .classical import RationalDirection


def resolve_output(cfg, override=None):
    root = os.environ.get("TORUSBAND_OUT", "")
    sub = override if override is not None else \
        cfg.get_str("output", "dir", default="out")
    out = Path(root) / sub if root else Path(sub)
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_symbol(cfg):
    """Build the symbol a config describes (generate, file, or inline)."""
    source = cfg.get_str("symbol", "source", default="generate")
    if source == "generate":
        f = cfg.get_int("symbol", "F", default=2)
        kappa = cfg.get_float("symbol", "kappa", default=2.0)
        seed = cfg.get_int("symbol", "seed", required=True)
        return generate_random_symbol(f, kappa, seed)
    if source == "file":
        path = cfg.get_str("symbol", "path", required=True)
        try:
            return read_symbol(path)
        except OSError as exc:
            raise ConfigError(f"cannot read symbol file {path}: {exc}")
    if source == "inline":
        terms = {}
        for l, prefix in enumerate(("q0", "q1", "q2")):
            for idx, val in cfg.get_complex_map("symbol", prefix).items():
                if not isinstance(idx, tuple) or len(idx) != 2:
                    raise ConfigError(
                        f"inline key {prefix}[{idx}] needs two indices j,k")
                terms[(l, idx[0], idx[1])] = val
        if not terms:
            raise ConfigError("inline symbol has no q0/q1/q2 coefficients")
        f = cfg.get_int("symbol", "F",
                        default=max(max(abs(j), abs(k)) for (_, j, k) in terms))
        kappa = cfg.get_float("symbol", "kappa", default=1.0)
        return SymbolCoefficients.from_terms(f, terms, kappa, seed=None)
    raise ConfigError(f"[symbol] source must be generate, file, or inline, "
                      f"got {source!r}")


def _fmt(val):
    if isinstance(val, (int, np.integer)):
        return "%d" % val
    return "%.17g" % val


def write_table(path, title, meta, columns, rows):
    lines = [f"# {title}"]
    for key, val in meta:
        lines.append(f"# {key} = {val}")
    lines.append("# columns: " + " ".join(columns))
    for row in rows:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return Path(path)


def update_manifest(out, stage, params):
    path = Path(out) / "manifest.json"
    data = {}
    if path.exists():
        data = json.loads(path.read_text())
    data["package"] = "torusband"
    data["version"] = __version__
    data.setdefault("library_versions", {})
    data["library_versions"]["numpy"] = np.__version__
    data["library_versions"]["matplotlib"] = matplotlib.__version__
    data.setdefault("stages", {})
    data["stages"][stage] = params
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _symbol_params(cfg):
    source = cfg.get_str("symbol", "source", default="generate")
    params = {"source": source}
    if source == "generate":
        params["F"] = cfg.get_int("symbol", "F", default=2)
        params["kappa"] = cfg.get_float("symbol", "kappa", default=2.0)
        params["seed"] = cfg.get_int("symbol", "seed", required=True)
    elif source == "file":
        params["path"] = cfg.get_str("symbol", "path", required=True)
    return params


def run_gen_symbol(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    sym = load_symbol(cfg)
    path = out / "symbol.txt"
    write_symbol(path, sym)
    manifest = update_manifest(out, "gen-symbol", _symbol_params(cfg))
    return [path, manifest]


def run_classical(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    sym = load_symbol(cfg)
    energy = cfg.get_float("classical", "energy", default=1.0)
    n_samples = cfg.get_int("classical", "n_samples", default=256)
    root_e = math.sqrt(energy)

    rows = []
    segments = []
    for direction in rational_directions(sym.degree_F):
        itv = q_infinity_interval(sym, direction, energy)
        rows.append((direction.m, direction.n, itv.torus_average, itv.q_inf,
                     itv.q_sup, itv.t_min, itv.second_derivative_at_min,
                     itv.torus_min_q, itv.torus_max_q))
        for orientation in (1, -1):
            xi, eta = direction.momentum(energy, orientation)
            c = line_coefficients(sym, direction, xi, eta)
            _, g_min, _, _, g_max = trig_extrema(c)
            segments.append((math.atan2(eta, xi) % (2.0 * math.pi),
                             g_min, g_max))
    segments.sort()
    dir_path = write_table(
        out / "classical_directions.txt", "torusband limit intervals",
        [("energy", _fmt(energy))],
        ["m", "n", "torus_average", "q_inf", "q_sup", "t_min",
         "second_derivative_at_min", "torus_min_q", "torus_max_q"], rows)

    angles = 2.0 * math.pi * (np.arange(n_samples) + 0.5) / n_samples
    curve_rows = []
    for phi in angles:
        xi = root_e * math.cos(phi)
        eta = root_e * math.sin(phi)
        avg = float((sym.combined(xi, eta))[sym.degree_F, sym.degree_F].real)
        tmin, tmax = torus_extrema(sym, xi, eta)
        curve_rows.append((phi, avg, tmin, tmax))
    curve_path = write_table(
        out / "classical_curve.txt", "torusband torus averages over angle",
        [("energy", _fmt(energy)), ("n_samples", n_samples)],
        ["angle", "torus_average", "torus_min", "torus_max"], curve_rows)

    seg_path = write_table(
        out / "classical_segments.txt", "torusband limit segments by angle",
        [("energy", _fmt(energy))],
        ["angle", "q_inf", "q_sup"], segments)

    fig_path = figures.classical_figure(
        out / "classical.png", [r[0] for r in curve_rows],
        [r[1] for r in curve_rows], [r[2] for r in curve_rows],
        [r[3] for r in curve_rows], segments)
    manifest = update_manifest(out, "classical", {
        "symbol": _symbol_params(cfg), "energy": energy,
        "n_samples": n_samples})
    return [dir_path, curve_path, seg_path, Path(fig_path), manifest]


def _grid_params(cfg):
    h = cfg.get_float("grid", "h", required=True)
    epsilons = cfg.get_floats("grid", "epsilons", required=True)
    e1 = cfg.get_float("grid", "e1", required=True)
    e2 = cfg.get_float("grid", "e2", required=True)
    if not (h > 0.0):
        raise ConfigError("[grid] h must be positive")
    if not (0.0 <= e1 <= e2):
        raise ConfigError("[grid] needs 0 <= e1 <= e2")
    if any(e < 0.0 for e in epsilons):
        raise ConfigError("[grid] epsilons must be nonnegative")
    return h, epsilons, e1, e2


def _spectrum_one(args):
    sym, shl, eps, backend, probes = args
    mat = assemble_matrix(sym, shl, eps)
    return compute_spectrum(mat, backend=backend, residual_probes=probes)


def run_spectrum(cfg, out_override=None, workers=1):
    out = resolve_output(cfg, out_override)
    sym = load_symbol(cfg)
    h, epsilons, e1, e2 = _grid_params(cfg)
    cap = cfg.get_int("spectrum", "dim_cap", default=3000)
    probes = cfg.get_int("spectrum", "residual_probes", default=3)
    backend = cfg.get_str("spectrum", "backend", default="auto")
    shl = build_mode_shell(h, e1, e2)
    if shl.count > cap:
        raise DimensionCapExceeded(
            f"shell holds {shl.count} modes, above the cap {cap}; raise "
            "[spectrum] dim_cap or shrink the window")
    band = band_bounds(sym, energy=0.5 * (e1 + e2))
    jobs = [(sym, shl, eps, backend, probes) for eps in epsilons]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_spectrum_one, jobs))
    else:
        records = [_spectrum_one(j) for j in jobs]
    paths = []
    for eps, record in zip(epsilons, records):
        stem = f"spectrum_h{h:g}_eps{eps:g}"
        spath = out / f"{stem}.txt"
        write_spectrum(spath, record, sym, shl)
        paths.append(spath)
        paths.append(Path(figures.spectrum_figure(out / f"{stem}.png",
                                                  record, band)))
    manifest = update_manifest(out, "spectrum2d", {
        "symbol": _symbol_params(cfg), "h": h, "epsilons": list(epsilons),
        "e1": e1, "e2": e2, "modes": shl.count, "backend": backend,
        "residual_probes": probes, "band_inf": band[0], "band_sup": band[1]})
    paths.append(manifest)
    return paths


def _model_from_cfg(cfg, target_abs_z=0.0):
    h = cfg.get_float("model1d", "h", required=True)
    eps = cfg.get_float("model1d", "epsilon", required=True)
    theta = cfg.get_float("model1d", "theta", default=0.0)
    potential = {int(k): v for k, v in
                 cfg.get_complex_map("model1d", "v").items()}
    if not potential:
        raise ConfigError("[model1d] needs potential keys v[nu] = re im")
    jm_raw = cfg.get_str("model1d", "j_max", default="auto")
    target = cfg.get_float("model1d", "target_abs_z", default=target_abs_z)
    if jm_raw == "auto":
        jm = suggest_j_max(h, eps, theta, potential, target_abs_z=target)
    else:
        try:
            jm = int(jm_raw)
        except ValueError:
            raise ConfigError(f"[model1d] j_max = {jm_raw!r} is not an "
                              "integer or 'auto'")
    return Model1D(h=h, epsilon=eps, theta=theta, potential=potential,
                   j_max=jm, target_abs_z=target)


def run_model1d(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    model = _model_from_cfg(cfg)
    count = cfg.get_int("model1d", "count", default=4)
    backend = cfg.get_str("spectrum", "backend", default="auto")
    w = low_lying_spectrum(model, count, backend=backend)
    v_min, _, d2, _ = potential_range(model.potential)
    scale = math.sqrt(model.epsilon) * model.h
    ref = 1j * model.epsilon * v_min + scale * harmonic_ladder(d2, 2.0,
                                                               count - 1)
    rows = [(k, w[k].real, w[k].imag, ref[k].real, ref[k].imag,
             abs(w[k] - ref[k])) for k in range(len(w))]
    table = write_table(
        out / "model1d_spectrum.txt", "torusband 1d low-lying spectrum",
        [("h", _fmt(model.h)), ("eps", _fmt(model.epsilon)),
         ("theta", _fmt(model.theta)), ("j_max", model.j_max),
         ("v_min", _fmt(v_min)), ("v_curvature", _fmt(d2))],
        ["k", "re", "im", "ladder_re", "ladder_im", "abs_gap"], rows)
    fig = figures.ladder_figure(out / "model1d_spectrum.png", w, ref)
    manifest = update_manifest(out, "model1d", {
        "h": model.h, "epsilon": model.epsilon, "theta": model.theta,
        "j_max": model.j_max, "count": count})
    return [table, Path(fig), manifest]


def _predict_directions(cfg):
    pairs = cfg.get_pairs("predict", "directions", required=True)
    dirs = []
    for m, n in pairs:
        try:
            dirs.append(RationalDirection(m, n))
        except ValueError as exc:
            raise ConfigError(f"[predict] directions: {exc}")
    return dirs


def run_predict(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    sym = load_symbol(cfg)
    h, epsilons, e1, e2 = _grid_params(cfg)
    energy = cfg.get_float("predict", "energy", default=0.5 * (e1 + e2))
    k_max = cfg.get_int("predict", "k_max", default=3)
    j_range = cfg.get_int("predict", "j_range", default=4)
    paths = []
    for direction in _predict_directions(cfg):
        for eps in epsilons:
            if eps <= 0.0:
                continue
            pred = predict_lattice(sym, direction, energy, h, eps,
                                   j_range, k_max)
            rows = [(jj, k, pred.xi2_values[jj + j_range],
                     pred.predictions[(jj, k)].real,
                     pred.predictions[(jj, k)].imag)
                    for jj in range(-j_range, j_range + 1)
                    for k in range(k_max + 1)]
            path = write_table(
                out / f"predict_m{direction.m}_n{direction.n}_eps{eps:g}.txt",
                "torusband lattice prediction",
                [("m", direction.m), ("n", direction.n),
                 ("energy", _fmt(energy)), ("h", _fmt(h)),
                 ("eps", _fmt(eps)),
                 ("prefactor_re", _fmt(pred.ladder_prefactor.real)),
                 ("prefactor_im", _fmt(pred.ladder_prefactor.imag))],
                ["jj", "k", "xi2", "re", "im"], rows)
            paths.append(path)
    manifest = update_manifest(out, "predict", {
        "symbol": _symbol_params(cfg),
        "directions": [[d.m, d.n] for d in _predict_directions(cfg)],
        "h": h, "epsilons": list(epsilons), "energy": energy,
        "k_max": k_max, "j_range": j_range})
    paths.append(manifest)
    return paths


def body_bounds_excluding(sym, excluded, energy, n_samples=256):
    """Band bounds of the spectral body with one direction's limit interval
    left out, used to isolate that direction's legs."""
    f = sym.degree_F
    c0 = sym.coeff(0, 0, 0).real
    c1 = sym.coeff(1, 0, 0).real
    c2 = sym.coeff(2, 0, 0).real
    root_e = math.sqrt(energy)
    phis = 2.0 * math.pi * (np.arange(n_samples) + 0.5) / n_samples
    averages = c0 + root_e * (c1 * np.cos(phis) + c2 * np.sin(phis))
    lo = float(np.min(averages))
    hi = float(np.max(averages))
    for direction in rational_directions(f):
        if (direction.m, direction.n) == (excluded.m, excluded.n):
            continue
        for orientation in (1, -1):
            xi, eta = direction.momentum(energy, orientation)
            c = line_coefficients(sym, direction, xi, eta)
            _, g_min, _, _, g_max = trig_extrema(c)
            lo = min(lo, g_min)
            hi = max(hi, g_max)
    return lo, hi


def _read_prediction_rows(path):
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            parts = line.split()
            rows.append((int(parts[0]), int(parts[1]), float(parts[2]),
                         complex(float(parts[3]), float(parts[4]))))
    return meta, rows


def run_compare(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    sym = load_symbol(cfg)
    h, epsilons, e1, e2 = _grid_params(cfg)
    pairs = cfg.get_pairs("compare", "direction", required=True)
    if len(pairs) != 1:
        raise ConfigError("[compare] direction must be a single m,n pair")
    try:
        direction = RationalDirection(*pairs[0])
    except ValueError as exc:
        raise ConfigError(f"[compare] direction: {exc}")
    side = cfg.get_str("compare", "side", default="below")
    margin = cfg.get_float("compare", "margin", default=0.1)
    cap = cfg.get_float("compare", "cap", default=2.0)
    energy = cfg.get_float("predict", "energy", default=0.5 * (e1 + e2))
    body = body_bounds_excluding(sym, direction, energy)

    paths = []
    summary_rows = []
    for eps in epsilons:
        if eps <= 0.0:
            continue
        spath = out / f"spectrum_h{h:g}_eps{eps:g}.txt"
        ppath = out / f"predict_m{direction.m}_n{direction.n}_eps{eps:g}.txt"
        for need in (spath, ppath):
            if not need.exists():
                raise ConfigError(
                    f"missing input {need}; run the spectrum2d and predict "
                    "stages first")
        record, _ = read_spectrum(spath)
        _, prows = _read_prediction_rows(ppath)
        keys = [(jj, k) for jj, k, _, _ in prows]
        pvals = np.array([z for _, _, _, z in prows], dtype=complex)
        leg = extract_leg(record, body, side=side, margin=margin)
        report = match_spectra(pvals, leg, h, eps, cap=cap)

        # calibration: measured over predicted rung gap in the tip block
        calibration = float("nan")
        if report.pairs:
            tip_pair = min(report.pairs, key=lambda p: p.computed.imag)
            jj_tip = keys[tip_pair.pred_index][0]
            block = sorted((keys[p.pred_index][1], p) for p in report.pairs
                           if keys[p.pred_index][0] == jj_tip)
            if len(block) >= 2:
                meas = np.mean([block[i + 1][1].computed - block[i][1].computed
                                for i in range(len(block) - 1)])
                pred = np.mean([block[i + 1][1].predicted -
                                block[i][1].predicted
                                for i in range(len(block) - 1)])
                if abs(pred) > 0.0:
                    calibration = float(abs(meas) / abs(pred))
        flag = "ok" if (np.isfinite(calibration) and
                        abs(calibration - 1.0) <= 0.2) else "check"
        summary_rows.append((eps, len(leg), len(report.pairs),
                             len(report.unmatched_predicted),
                             len(report.unmatched_computed),
                             report.rms_rescaled_error, calibration, flag))
        mpath = write_table(
            out / f"compare_matches_eps{eps:g}.txt",
            "torusband lattice match",
            [("m", direction.m), ("n", direction.n), ("h", _fmt(h)),
             ("eps", _fmt(eps)), ("side", side), ("margin", _fmt(margin)),
             ("body_inf", _fmt(body[0])), ("body_sup", _fmt(body[1]))],
            ["pred_re", "pred_im", "comp_re", "comp_im", "distance"],
            [(p.predicted.real, p.predicted.imag, p.computed.real,
              p.computed.imag, p.distance) for p in report.pairs])
        paths.append(mpath)
        paths.append(Path(figures.compare_figure(
            out / f"compare_eps{eps:g}.png", pvals, leg,
            [(p.predicted, p.computed, p.distance) for p in report.pairs],
            h, eps)))

    lines = ["# torusband comparison summary",
             f"# direction = {direction.m},{direction.n}",
             f"# side = {side}",
             "# columns: eps n_leg n_matched n_unmatched_pred "
             "n_unmatched_comp rms_rescaled calibration flag"]
    for row in summary_rows:
        lines.append("%.17g %d %d %d %d %.17g %.17g %s" % row)
    sumpath = out / "compare_summary.txt"
    sumpath.write_text("\n".join(lines) + "\n")
    paths.append(sumpath)
    manifest = update_manifest(out, "compare", {
        "symbol": _symbol_params(cfg), "direction": [direction.m, direction.n],
        "h": h, "epsilons": list(epsilons), "side": side, "margin": margin})
    paths.append(manifest)
    return paths


def run_rescheck(cfg, out_override=None):
    out = resolve_output(cfg, out_override)
    re_min = cfg.get_float("rescheck", "re_min", required=True)
    re_max = cfg.get_float("rescheck", "re_max", required=True)
    n_re = cfg.get_int("rescheck", "n_re", default=12)
    im_values = cfg.get_floats("rescheck", "im_values", default=[0.0])
    cutoff_c = cfg.get_float("rescheck", "cutoff_c", default=1.0)
    c1 = cfg.get_float("rescheck", "c1", default=1.0)
    zmax = math.hypot(max(abs(re_min), abs(re_max)),
                      max(abs(v) for v in im_values))
    model = _model_from_cfg(cfg)
    if model.target_abs_z < model.epsilon * zmax:
        model.target_abs_z = model.epsilon * zmax
        model.j_max = max(model.j_max, suggest_j_max(
            model.h, model.epsilon, model.theta, model.potential,
            target_abs_z=model.target_abs_z))
    region = ZRegion(re_min, re_max, n_re, tuple(im_values))
    probe, c_fit = resolvent_bound_scan(model, region, cutoff_c=cutoff_c,
                                        c1=c1)
    ppath = out / "rescheck_probe.txt"
    write_probe(ppath, probe, c_fit)
    fig = figures.resolvent_figure(out / "rescheck_probe.png", probe, c_fit)
    manifest = update_manifest(out, "rescheck", {
        "h": model.h, "epsilon": model.epsilon, "j_max": model.j_max,
        "re_min": re_min, "re_max": re_max, "n_re": n_re,
        "im_values": list(im_values), "cutoff_c": cutoff_c, "c1": c1,
        "fitted_c": c_fit})
    return [ppath, Path(fig), manifest]
