"""Experiment orchestration: runs a config and writes report/CSV files atomically."""

from __future__ import annotations

import csv
import io
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, equivalence, greenfn, hopfield, medium
from .config import GridSpec, ExperimentConfig
from .errors import PoleError

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".15g")
    return str(x)


def csv_text(header: list[str], rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(comment + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def report_text(title: str, items) -> str:
    lines = [f"experiment: {title}"]
    for key, val in items:
        lines.append(f"{key}: {fmt(val)}")
    return "\n".join(lines) + "\n"


@dataclass
class Outcome:
    files: dict[str, str] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def check(self, label: str, ok: bool) -> bool:
        if not ok:
            self.failures.append(label)
        return ok

    def merge(self, other: "Outcome") -> None:
        self.files.update(other.files)
        self.failures.extend(other.failures)


# ------------------------------------------------------------------ kk-check

def run_kk_check(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    model = cfg.medium
    if model.kind == "tabulated":
        grid = model.grid
    else:
        grid = medium.sample(model, cfg.grid("sample", GridSpec(1e-3, 50.0, 4000, "log")))
    rep = medium.validate_kk(grid, cfg.tol("kk"))
    out.check("kk", rep.passed)
    items = [("medium", model.kind), ("grid_points", len(grid)), ("omega_min", grid.omega_min),
             ("omega_max", grid.omega_max), ("re_chi_from_kk", grid.re_from_kk)]
    items += list(rep.summary().items())
    if model.is_analytic:
        rel = rep.abs_dev / np.maximum(np.abs(rep.re_chi), 1e-300)
        items.append(("max_rel_dev", float(rel.max()) if rel.size else 0.0))
    if grid.re_from_kk:
        items.append(("note", "re_chi reconstructed from im_chi; deviations are self-consistency only"))
    if not rep.tail_ok:
        items.append(("note", f"|chi(omega_max)| = {abs(grid.chi[-1]):.3e} exceeds the tail tolerance {grid.tail_tol:.1e}"))
    out.add("kk-check-report.txt", report_text("kk-check", items))
    rows = zip(rep.omega, rep.re_chi, rep.im_chi, rep.kk_re_chi, rep.abs_dev)
    out.add("kk-check-points.csv", csv_text(["omega", "re_chi", "im_chi", "kk_re_chi", "abs_dev"], rows))
    return out


# ---------------------------------------------------------------------- fano

def run_fano(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    model = cfg.medium
    if model.kind != "hopfield-microscopic":
        out.add("fano-report.txt", report_text("fano", [("medium", model.kind),
                                                         ("note", "skipped: needs a hopfield-microscopic medium")]))
        return out
    disc = cfg.reservoir.discretization(model)
    form = hopfield.build_matter_hamiltonian(model, disc)
    coeffs = hopfield.bogoliubov_diagonalize(form)
    ratio = hopfield.ratio_check(coeffs, form.omega_tilde, cfg.tol("ratio"))
    norm_dev = float(np.max(np.abs(coeffs.normalization() - 1.0)))
    col_dev = float(np.max(np.abs(coeffs.column_normalization() - 1.0)))
    keep = np.abs(coeffs.alpha0) > hopfield.ALPHA0_FLOOR
    cons = hopfield.imchi_consistency(coeffs.continuum_alpha0()[keep], coeffs.continuum_beta0()[keep],
                                      coeffs.frequencies[keep], model, form.omega_tilde)
    fsum = hopfield.f_sum_rule(coeffs, model)
    out.check("ratio", ratio.passed)
    out.check("normalization", norm_dev <= cfg.tol("normalization"))
    out.check("consistency", cons.max_dev <= cfg.tol("consistency"))
    items = [
        ("medium", model.kind),
        ("reservoir_n", disc.n),
        ("reservoir_min", float(disc.omega[0])),
        ("reservoir_max", float(disc.omega[-1])),
        ("omega_tilde", form.omega_tilde),
        ("eigenmodes", len(coeffs.frequencies)),
        ("ratio_modes_considered", ratio.considered),
        ("ratio_max_rel_dev", ratio.max_dev),
        ("ratio_tol", ratio.tol),
        ("ratio_passed", ratio.passed),
        ("normalization_max_dev", norm_dev),
        ("column_normalization_max_dev", col_dev),
        ("consistency_max_rel_dev", cons.max_dev),
        ("f_sum_exact", fsum["exact"]),
        ("f_sum_renormalized_reading", fsum["renormalized"]),
        ("f_sum_bare_reading", fsum["bare"]),
        ("phase_convention", "alpha0 real positive per eigenmode"),
        ("continuum_rescaling", "alpha0 / sqrt(w) at the nearest reservoir node"),
    ]
    out.add("fano-report.txt", report_text("fano", items))
    out.add("fano-coefficients.csv",
            csv_text(["omega", "alpha0_re", "alpha0_im", "beta0_re", "beta0_im"], coeffs.to_rows()))
    return out


# ------------------------------------------------------------------- kernels

def _directions(n: int) -> np.ndarray:
    # deterministic spread of unit vectors (golden-angle spiral)
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (3 - np.sqrt(5)) * i
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def run_kernels(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    model = cfg.medium
    omegas = cfg.grid("omega", GridSpec(0.2, 3.0, 20))
    ks = cfg.grid("k", GridSpec(0.5, 3.0, 20))
    rows, poles = [], 0
    oracle_dev, trans_dev, printed_dev = 0.0, 0.0, 0.0
    dirs = _directions(len(ks))
    for w in omegas:
        w = float(w)
        eps = complex(medium.epsilon(model, w))
        for k, d in zip(ks, dirs):
            k = float(k)
            try:
                val = greenfn.transverse_kernel(k, w, model)
                kv = k * d
                G = greenfn.green_tensor(kv, w, eps)
                T, _ = greenfn.green_tensor_parts(kv, w, eps)
            except PoleError:
                poles += 1
                continue
            rows.append((w, k, "transverse", val.real, val.imag))
            solve = np.linalg.solve(greenfn.maxwell_operator(kv, w, eps), np.eye(3))
            oracle_dev = max(oracle_dev, float(np.linalg.norm(G - solve) / np.linalg.norm(solve)))
            trans_dev = max(trans_dev, float(np.abs(T @ d).max()))
            printed_dev = max(printed_dev, greenfn.printed_bracket_discrepancy(kv, w, eps))
        try:
            a_form, _ = greenfn.longitudinal_kernel(w, model)
            rows.append((w, 0.0, "longitudinal", a_form.real, a_form.imag))
        except PoleError:
            poles += 1
    out.check("green", oracle_dev <= cfg.tol("green"))
    items = [
        ("medium", model.kind),
        ("omega_points", len(omegas)),
        ("k_points", len(ks)),
        ("pole_points_skipped", poles),
        ("green_vs_linear_solve_max_rel_dev", oracle_dev),
        ("green_tol", cfg.tol("green")),
        ("transversality_max_abs", trans_dev),
        ("printed_single_bracket_max_rel_dev", printed_dev),
        ("field_prefactor", greenfn.FIELD_NORM),
        ("note", "kernel values exclude the field prefactor; longitudinal rows carry k = 0 (k-independent)"),
    ]
    out.add("kernels-report.txt", report_text("kernels", items))
    out.add("kernels-points.csv", csv_text(["omega", "k", "polarization", "re", "im"], rows))
    return out


# ------------------------------------------------------------------ dynamics

def run_dynamics(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    model = cfg.medium
    wk = cfg.dynamics.get("omega_k", 1.0)
    w = cfg.dynamics.get("omega", 1.0)
    t = cfg.grid("t", GridSpec(0.1, 50.0, 200))
    items = [("medium", model.kind), ("omega_k", wk), ("omega", w), ("t_points", len(t))]
    z = dynamics.time_kernel("z", model, t, omega_k=wk)
    xi = dynamics.time_kernel("xi", model, t, omega_k=wk, omega=w)
    q = dynamics.time_kernel("q", model, t, omega=w)
    z0 = complex(dynamics.z_kernel(wk, model, 1e-9))
    q0 = complex(dynamics.q_kernel(w, model, 1e-9))
    dz0 = abs(z0 - 1)
    out.check("initial", dz0 <= cfg.tol("initial"))
    items += [("z_initial_abs_dev", dz0), ("q_initial_value_re", q0.real), ("q_initial_value_im", q0.imag)]
    if model.kind != "constant-chi":
        out.check("initial", abs(q0 - 1) <= cfg.tol("initial"))
        items.append(("q_initial_abs_dev", abs(q0 - 1)))
    else:
        items.append(("note", "memoryless chi: Q(0+) = 1/(1 + chi), not 1"))
    zmax = float(np.abs(z.values).max())
    items.append(("max_abs_z", zmax))
    if model.is_analytic:
        ps = dynamics.find_poles(wk, model)
        dev = float(np.abs(ps.evaluate(t) - z.values).max())
        out.check("residue", dev <= cfg.tol("residue"))
        items += [("poles", len(ps.poles)), ("residue_expansion_max_abs_dev", dev)]
        out.add("dynamics-poles.csv", csv_text(["re_omega", "im_omega", "re_residue", "im_residue"], ps.to_rows(),
                                               f"# poles omega_n = -i s_n, z(t) = sum r_n exp(i omega_n t); omega_k={wk:.15g}"))
        if not model.is_lossless:
            T = cfg.dynamics.get("decay_t", 200.0 / model.gamma if model.gamma > 0 else 200.0)
            rep = dynamics.long_time_decay(wk, model, T)
            items += [("decay_" + line.split(": ")[0], line.split(": ", 1)[1]) for line in rep.summary().splitlines()]
        else:
            items.append(("decay_note", "non-decaying (lossless)"))
    for name, ker in (("z", z), ("xi", xi), ("q", q)):
        out.add(f"dynamics-{name}.csv", csv_text(["t", "re", "im"], ker.rows(), ker.header()))
    out.add("dynamics-report.txt", report_text("dynamics", items))
    return out


# --------------------------------------------------------------- equivalence

def run_equivalence(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    model = cfg.medium
    omegas = cfg.grid("omega", GridSpec(0.3, 2.0, 20))
    ks = cfg.grid("k", GridSpec(0.6, 2.0, 20))
    lomegas = cfg.grid("lomega", GridSpec(0.2, 3.0, 50))
    reports = [
        equivalence.compare_transverse(omegas, ks, model, cfg.tol("transverse")),
        equivalence.compare_longitudinal(lomegas, model, cfg.tol("longitudinal")),
    ]
    disc = cfg.reservoir.discretization(model) if model.kind == "hopfield-microscopic" else None
    reports.append(equivalence.commutator_suite(model, disc, cfg.tol("commutator"), lomegas))
    text, rows = [], []
    for rep in reports:
        out.check(f"equivalence-{rep.name}", rep.passed)
        text.append(rep.summary())
        rows += rep.rows()
    out.add("equivalence-report.txt", "experiment: equivalence\n" + "\n".join(text))
    out.add("equivalence-points.csv", csv_text(["omega", "k", "pair", "rel_dev", "flag"], rows))
    return out


RUNNERS = {
    "kk-check": run_kk_check,
    "fano": run_fano,
    "kernels": run_kernels,
    "dynamics": run_dynamics,
    "equivalence": run_equivalence,
}


def _commit(files: dict[str, str], out_dir: Path) -> None:
    created = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".lossy-qed-", dir=out_dir))
    try:
        for name, text in files.items():
            with open(tmp / name, "w", newline="") as fh:
                fh.write(text)
        for name in files:
            os.replace(tmp / name, out_dir / name)
    except BaseException:
        if created:
            shutil.rmtree(out_dir, ignore_errors=True)
        raise
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def run_experiment(cfg: ExperimentConfig) -> tuple[int, list[str]]:
    """Run ``cfg`` and write its files; returns (exit status, failed checks).

    Every computation finishes before anything is written, so numerical
    errors leave the output directory untouched.
    """
    names = list(RUNNERS) if cfg.experiment == "all" else [cfg.experiment]
    total = Outcome()
    for name in names:
        total.merge(RUNNERS[name](cfg))
    _commit(total.files, cfg.output_dir)
    return (EXIT_TOLERANCE if total.failures else EXIT_OK), total.failures
