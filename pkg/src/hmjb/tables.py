"""Desk-scale re-runs of the published parameter and simulation tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import UnknownTable
from .families import exact_T, square_family
from .harness import SimulationConfig, TestSpec, run_replications
from .influence import build_influence
from .moments import double_gamma_moments, laplace_moments, normal_moments, theoretical_ncem

__all__ = ["Table", "TABLE_IDS", "reproduce_table", "PUBLISHED"]

DGAMMA_SHAPE = (1 + math.sqrt(13)) / 2

# values as printed in the published parameter tables (k = 3, f = g = u**2)
PUBLISHED = {
    "normal": {"ncem": [(0, 3), (0, 15), (0, 105), (0, 946), (0, 10395)], "T": 234, "sigma": 500.2918},
    "dexp": {
        "ncem": [(0, 6), (0, 90), (0, 2520), (0, 113400), (0, 7484400)],
        "T": 8136,
        "sigma": 73473,
    },
}

# (true model, null model, published n values, tests)
_SIMS = {
    "normal-sim": ("normal", "normal", (20, 100, 1000), ("general", "jb", "ks")),
    "dexp-vs-normal": ("dexp", "normal", (11, 22), ("general", "jb", "ks")),
    "dgamma-vs-normal": ("dgamma", "normal", (11, 22), ("general", "jb", "ks")),
    "dexp-sim": (None, "dexp", (800,), ("general",)),
}

TABLE_IDS = ("normal-params", "dexp-params") + tuple(_SIMS)


def _model(name: str):
    if name == "normal":
        return normal_moments(0.0, 1.0)
    if name == "dexp":
        return laplace_moments(1.0)
    return double_gamma_moments(DGAMMA_SHAPE, 1.0)


@dataclass
class Table:
    table_id: str
    title: str
    columns: list[str]
    rows: list[list]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "table_id": self.table_id,
            "title": self.title,
            "columns": self.columns,
            "rows": self.rows,
            "notes": self.notes,
        }

    def render(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return f"{v:.6g}"
            return str(v)

        cells = [self.columns] + [[fmt(v) for v in row] for row in self.rows]
        widths = [max(len(r[j]) for r in cells) for j in range(len(self.columns))]
        lines = [self.title, ""]
        for i, r in enumerate(cells):
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        if self.notes:
            lines.append("")
            lines.extend(f"* {note}" for note in self.notes)
        return "\n".join(lines)


def _params_table(table_id: str, name: str) -> Table:
    model = _model(name)
    fam = square_family()
    pub = PUBLISHED[name]
    rows = []
    for p, (pb, pa) in zip(range(2, 7), pub["ncem"]):
        nc = theoretical_ncem(model, p)
        ours = (nc.b, nc.a)
        agree = math.isclose(ours[0], pb, abs_tol=1e-9) and math.isclose(ours[1], pa, rel_tol=1e-9)
        rows.append([f"(b_{p}, a_{p})", f"({ours[0]:g}, {ours[1]:g})", f"({pb:g}, {pa:g})", "yes" if agree else "NO"])
    T = exact_T(fam, 3, model)
    rows.append(["T(f,g,3)", T, pub["T"], "yes" if math.isclose(T, pub["T"], rel_tol=1e-9) else "NO"])
    sigma = math.sqrt(build_influence(3, fam, model).sigma2)
    rows.append(["sigma_3", sigma, pub["sigma"], "yes" if math.isclose(sigma, pub["sigma"], rel_tol=1e-3) else "NO"])
    notes = [
        "k = 3, f = g = u^2; computed sigma_3 is the square root of the exact "
        "variance of the influence polynomial D_3",
    ]
    if rows[-1][-1] == "NO":
        notes.append(
            f"published sigma {pub['sigma']} disagrees with the exact value {sigma:.6g}; "
            "Monte Carlo checks support the exact value"
        )
    if name == "normal":
        notes.append("published (0,946) for p=5 is 945 = 10!/(2^5 5!)")
    return Table(table_id, f"{name} model parameters", ["quantity", "computed", "published", "agree"], rows, notes)


def _sim_table(table_id: str, scale: float, B: int, seed: int, tail: str) -> Table:
    true_name, null_name, ns, tests = _SIMS[table_id]
    null = _model(null_name)
    fam = square_family()
    specs = tuple(TestSpec(t) for t in tests)
    runs = []
    trues = [true_name] if true_name else ["dexp", "normal"]
    for tn in trues:
        for n in ns:
            runs.append((tn, max(8, int(round(n * scale)))))
    columns = ["data", "n", "T_n", "T_n*", "p%", "reject%"]
    if "jb" in tests:
        columns += ["JB", "pJB%"]
    if "ks" in tests:
        columns += ["KS", "pKS%"]
    rows = []
    for i, (tn, n) in enumerate(runs):
        cfg = SimulationConfig(
            _model(tn), null, fam, k=3, n=n, B=B, seed=seed + i, tests=specs, tail=tail,
        )
        res = run_replications(cfg)
        g = res.aggregate("general")
        row = [cfg.model_true.describe(), n, g.mean_statistic, g.mean_standardized,
               100 * g.p_of_mean, 100 * g.rejection_rate]
        for lab in ("jb", "ks"):
            if lab in tests:
                a = res.aggregate(lab)
                row += [a.mean_statistic, 100 * a.p_of_mean]
        rows.append(row)
    notes = [
        f"null model {null.describe()}, k = 3, f = g = u^2, B = {B} replications per row, "
        f"seed {seed} (+ row index)",
        "T_n, T_n*, JB, KS are means over replications; p% is the p-value of the mean "
        f"({tail}); reject% is the fraction of replications rejected at 5%",
        "T_n* is standardized with the exact sigma_3, not the published sigma",
    ]
    if scale != 1:
        notes.append(f"published n values scaled by {scale:g}")
    return Table(table_id, f"simulation: {table_id}", columns, rows, notes)


def reproduce_table(
    table_id: str, scale: float = 1.0, B: int = 1000, seed: int = 0, tail: str = "one_sided_abs",
) -> Table:
    """Recompute one of the published tables.

    Parameter tables (``normal-params``, ``dexp-params``) are exact.
    Simulation tables rerun the replication protocol at the published sample
    sizes times ``scale``.  ``tail`` defaults to the one-sided convention
    because that is what the published percentages correspond to.
    """
    if table_id == "normal-params":
        return _params_table(table_id, "normal")
    if table_id == "dexp-params":
        return _params_table(table_id, "dexp")
    if table_id in _SIMS:
        return _sim_table(table_id, scale, B, seed, tail)
    raise UnknownTable(f"unknown table {table_id!r}; choose from {', '.join(TABLE_IDS)}")
